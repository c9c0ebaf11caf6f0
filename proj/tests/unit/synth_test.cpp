#include <gtest/gtest.h>

#include <sstream>

#include "soda/error.hpp"
#include "soda/synth.hpp"

using namespace soda;
using namespace soda::synth;

namespace {

CouplingSpec small_spec() {
  CouplingSpec spec;
  spec.frames = 20;
  spec.classes[0].lag = 2;
  return spec;
}

ErrorCode spec_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_coupling_spec(in);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoFailure;
}

}  // namespace

TEST(CoupledPair, SameSeedSameOutput) {
  const auto spec = small_spec();
  const auto a = gen_coupled_pair(spec, 5);
  const auto b = gen_coupled_pair(spec, 5);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, gen_coupled_pair(spec, 6).x);
  EXPECT_EQ(a.x.frames.size(), 20u);
  EXPECT_EQ(a.x.frames[0].persons.size(), spec.persons);
  for (const auto& f : a.y.frames)
    for (const auto& p : f.persons)
      for (const auto& slot : p.candidates)
        if (!slot.empty()) EXPECT_EQ(slot.size(), spec.candidates);
}

TEST(CoupledPair, FullCouplingWithoutNoiseCopiesExactly) {
  auto spec = small_spec();
  spec.classes[0].coupling = 1.0;
  spec.noise = 0.0;
  const auto pair = gen_coupled_pair(spec, 3);
  ASSERT_EQ(pair.truth.copied.size(), 18u);
  for (const auto& c : pair.truth.copied) {
    EXPECT_EQ(c.source + 2, c.target);
    EXPECT_EQ(pair.y.frames[c.target].persons, pair.x.frames[c.source].persons);
  }
}

TEST(CoupledPair, ZeroCouplingCopiesNothing) {
  auto spec = small_spec();
  spec.classes[0].coupling = 0.0;
  EXPECT_TRUE(gen_coupled_pair(spec, 3).truth.copied.empty());
}

TEST(CoupledPair, WindowLimitsCopies) {
  auto spec = small_spec();
  spec.classes[0].coupling = 1.0;
  spec.classes[0].active_window = std::make_pair(std::size_t{5}, std::size_t{9});
  const auto pair = gen_coupled_pair(spec, 4);
  ASSERT_EQ(pair.truth.copied.size(), 4u);
  EXPECT_EQ(pair.truth.copied.front().target, 5u);
  EXPECT_EQ(pair.truth.copied.back().target, 8u);
}

TEST(ReverseTime, IsAnInvolution) {
  const auto pair = gen_coupled_pair(small_spec(), 8);
  const auto r = reverse_time(pair.x);
  EXPECT_EQ(r.frames[0].persons, pair.x.frames.back().persons);
  EXPECT_EQ(r.frames[0].frame_index, 0);
  EXPECT_EQ(reverse_time(r), pair.x);
}

TEST(Corpus, ShapeAndDeterminism) {
  auto spec = small_spec();
  spec.classes.push_back({"b", 1, 0.5, std::nullopt, 1.5});
  const auto c = gen_corpus(spec, 4, 2);
  EXPECT_EQ(c.sequences.size(), 8u);
  EXPECT_EQ(c.members.size(), 8u);
  EXPECT_EQ(c.pairs.size(), 28u);
  std::size_t same = 0;
  for (const auto& p : c.pairs) same += p.same_class;
  EXPECT_EQ(same, 12u);
  EXPECT_EQ(c.sequences[4].label, std::optional<std::string>("b"));
  EXPECT_EQ(gen_corpus(spec, 4, 2).sequences, c.sequences);
  EXPECT_THROW(gen_corpus(spec, 3, 2), Error);
}

TEST(Spec, Validation) {
  auto spec = small_spec();
  spec.classes[0].lag = 20;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec();
  spec.classes[0].coupling = 1.5;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec();
  spec.arity = 4;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec();
  spec.classes.push_back(spec.classes[0]);
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Spec, ParseRoundTripAndUnknownKeys) {
  auto spec = small_spec();
  spec.classes[0].active_window = std::make_pair(std::size_t{2}, std::size_t{10});
  std::ostringstream out;
  write_coupling_spec(out, spec);
  std::istringstream in(out.str());
  const auto back = parse_coupling_spec(in);
  EXPECT_EQ(back.frames, 20u);
  EXPECT_EQ(back.classes[0].lag, 2u);
  EXPECT_EQ(back.classes[0].active_window, spec.classes[0].active_window);

  EXPECT_EQ(spec_error(R"({"frames":10,"colour":1})"), ErrorCode::InvalidSpec);
  EXPECT_EQ(spec_error(R"({"classes":[{"label":"a","speed":1}]})"), ErrorCode::InvalidSpec);
  EXPECT_EQ(spec_error(R"({"frames":"ten"})"), ErrorCode::InvalidSpec);
  EXPECT_EQ(spec_error("[1,2]"), ErrorCode::InvalidSpec);
  EXPECT_EQ(spec_error("{"), ErrorCode::InvalidSpec);
}

TEST(Truth, JsonListsCopiedFrames) {
  auto spec = small_spec();
  spec.classes[0].coupling = 1.0;
  const auto pair = gen_coupled_pair(spec, 1);
  std::ostringstream out;
  write_truth_json(out, {pair.truth});
  EXPECT_NE(out.str().find("\"copied_frames\""), std::string::npos);
  EXPECT_EQ(out.str().find("\"pairs\""), std::string::npos);
}
