#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "soda/error.hpp"
#include "soda/mrf.hpp"
#include "soda/random.hpp"

using namespace soda;
using namespace soda::mrf;
using ingest::PartId;
using ingest::PartState;

namespace {

ingest::Person person(std::int64_t id, std::vector<PartState> torso, std::vector<PartState> left,
                      std::vector<PartState> right) {
  ingest::Person p;
  p.id = id;
  p.slot(PartId::Torso) = std::move(torso);
  p.slot(PartId::LeftArm) = std::move(left);
  p.slot(PartId::RightArm) = std::move(right);
  return p;
}

PartState at(PartId part, double x, double y, double score = 0.0) { return {part, x, y, score}; }

// Torso fixed at the origin, right arm pinned to it, left arm choosing
// between the origin and one unit away.
ingest::FrameDetections two_cell_toy(bool observed_same = true) {
  ingest::FrameDetections f;
  std::vector<PartState> left{at(PartId::LeftArm, 0, 0), at(PartId::LeftArm, 1, 0)};
  if (!observed_same) std::swap(left[0], left[1]);
  f.persons.push_back(person(1, {at(PartId::Torso, 0, 0)}, left, {at(PartId::RightArm, 0, 0)}));
  return f;
}

double same_cell_probability(const DistributionTable& t, const PictorialModel& m) {
  const std::size_t la = m.variable_index(0, PartId::LeftArm);
  double p = 0.0;
  for (std::size_t k = 0; k < t.probs.size(); ++k)
    if (t.state(k).assignment[la] == 0) p += t.probs[k];
  return p;
}

}  // namespace

TEST(PictorialModel, EdgeSets) {
  const PictorialModel solo(5, 1, 1.0, 1.0, true);
  EXPECT_EQ(solo.variables().size(), 5u);
  EXPECT_EQ(solo.edges().size(), 4u);
  const PictorialModel pair(3, 2, 1.0, 1.0, true);
  EXPECT_EQ(pair.edges().size(), 2u * 2u + 3u);
  const PictorialModel trio(5, 3, 1.0, 1.0, false);
  EXPECT_EQ(trio.edges().size(), 3u * 4u);
  EXPECT_THROW(PictorialModel(4, 1, 1.0, 1.0, true), Error);
}

TEST(PictorialModel, LogPotentialOfTwoUnitEdges) {
  const PictorialModel m(3, 1, 1.0, 0.0, true);
  ingest::FrameDetections f;
  f.persons.push_back(person(1, {at(PartId::Torso, 0, 0)}, {at(PartId::LeftArm, 0, 1)}, {at(PartId::RightArm, 0, 1)}));
  EXPECT_DOUBLE_EQ(log_potential(m, f, {{0, 0, 0}}), -2.0);
}

TEST(PictorialModel, CoLocatedPartsCostNothing) {
  const PictorialModel m(3, 1, 3.7, 0.0, true);
  ingest::FrameDetections f;
  f.persons.push_back(person(1, {at(PartId::Torso, 2, 2)}, {at(PartId::LeftArm, 2, 2)}, {at(PartId::RightArm, 2, 2)}));
  EXPECT_DOUBLE_EQ(log_potential(m, f, {{0, 0, 0}}), 0.0);
}

TEST(PictorialModel, DisabledInteractionIgnoresOtherPeople) {
  const PictorialModel m(3, 2, 1.0, 5.0, false);
  auto make = [](double dx) {
    ingest::FrameDetections f;
    f.persons.push_back(person(1, {at(PartId::Torso, 0, 0)}, {at(PartId::LeftArm, 1, 0)}, {at(PartId::RightArm, 0, 1)}));
    f.persons.push_back(
        person(2, {at(PartId::Torso, dx, 0)}, {at(PartId::LeftArm, dx + 1, 0)}, {at(PartId::RightArm, dx, 1)}));
    return f;
  };
  const FrameConfiguration cfg{{0, 0, 0, 0, 0, 0}};
  EXPECT_DOUBLE_EQ(log_potential(m, make(3), cfg), log_potential(m, make(30), cfg));
  const PictorialModel on(3, 2, 1.0, 5.0, true);
  EXPECT_GT(log_potential(on, make(3), cfg), log_potential(on, make(30), cfg));
}

TEST(PictorialModel, RejectsOutOfRangeAssignment) {
  const PictorialModel m(3, 1, 1.0, 0.0, true);
  try {
    log_potential(m, two_cell_toy(), {{0, 2, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidAssignment);
  }
}

TEST(ExactJoint, TwoCellToy) {
  const PictorialModel m(3, 1, 1.0, 0.0, true);
  const auto t = exact_joint(m, two_cell_toy());
  EXPECT_NEAR(same_cell_probability(t, m), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(same_cell_probability(t, m), 0.7310585786300049, 1e-15);
}

TEST(ExactJoint, FlatPotentialIsUniform) {
  const PictorialModel m(3, 1, 0.0, 0.0, true);
  ingest::FrameDetections f;
  f.persons.push_back(person(1, {at(PartId::Torso, 0, 0), at(PartId::Torso, 3, 3)},
                             {at(PartId::LeftArm, 1, 0), at(PartId::LeftArm, 2, 0), at(PartId::LeftArm, 5, 0)},
                             {at(PartId::RightArm, 0, 1)}));
  const auto t = exact_joint(m, f);
  ASSERT_EQ(t.probs.size(), 6u);
  for (double p : t.probs) EXPECT_NEAR(p, 1.0 / 6.0, 1e-15);
}

TEST(ExactJoint, ScoreShiftInvariance) {
  const PictorialModel m(3, 1, 0.3, 0.0, true);
  auto f = two_cell_toy();
  f.persons[0].slot(PartId::LeftArm)[1].score = 0.4;
  const auto a = exact_joint(m, f);
  for (auto& slot : f.persons[0].candidates)
    for (auto& c : slot) c.score += 7.0;
  const auto b = exact_joint(m, f);
  for (std::size_t k = 0; k < a.probs.size(); ++k) EXPECT_NEAR(a.probs[k], b.probs[k], 1e-14);
}

TEST(ExactJoint, StateIndexRoundTrip) {
  DistributionTable t{{2, 3, 4}, std::vector<double>(24, 1.0 / 24)};
  for (std::size_t k = 0; k < 24; ++k) EXPECT_EQ(t.index_of(t.state(k)), k);
  EXPECT_EQ(t.state(23).assignment, (std::vector<std::uint32_t>{1, 2, 3}));
}

TEST(Gibbs, TwoCellToyFrequency) {
  const PictorialModel m(3, 1, 1.0, 0.0, true);
  const auto s = gibbs_sample(m, two_cell_toy(), {500, 20000}, 42);
  const std::size_t la = m.variable_index(0, PartId::LeftArm);
  std::size_t same = 0;
  for (std::size_t j = 0; j < s.size(); ++j) same += s.sample(j)[la] == 0;
  EXPECT_NEAR(static_cast<double>(same) / 20000.0, 0.7310585786300049, 0.02);
}

TEST(Gibbs, SingleCandidatesGiveIdenticalSamples) {
  const PictorialModel m(3, 1, 1.0, 0.0, true);
  ingest::FrameDetections f;
  f.persons.push_back(person(1, {at(PartId::Torso, 0, 0)}, {at(PartId::LeftArm, 4, 0)}, {at(PartId::RightArm, 0, 4)}));
  for (std::uint64_t seed : {1u, 2u}) {
    const auto s = gibbs_sample(m, f, {10, 50}, seed);
    for (std::size_t j = 0; j < s.size(); ++j)
      for (auto v : s.sample(j)) EXPECT_EQ(v, 0u);
  }
}

TEST(Gibbs, Reproducible) {
  const PictorialModel m(3, 1, 0.5, 0.0, true);
  const auto a = gibbs_sample(m, two_cell_toy(), {20, 300}, 9);
  const auto b = gibbs_sample(m, two_cell_toy(), {20, 300}, 9);
  const auto c = gibbs_sample(m, two_cell_toy(), {20, 300}, 10);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Gibbs, IndependentPeopleWithoutInteraction) {
  const PictorialModel m(3, 2, 0.5, 3.0, false);
  ingest::FrameDetections f;
  for (std::int64_t id : {1, 2}) {
    const double o = id == 1 ? 0.0 : 2.0;
    f.persons.push_back(person(id, {at(PartId::Torso, o, 0), at(PartId::Torso, o + 1, 0)},
                               {at(PartId::LeftArm, o, 1), at(PartId::LeftArm, o + 1, 1)},
                               {at(PartId::RightArm, o, 0)}));
  }
  const auto s = gibbs_sample(m, f, {200, 20000}, 3);
  // Plug-in MI between the two torsos.
  const std::size_t ta = m.variable_index(0, PartId::Torso);
  const std::size_t tb = m.variable_index(1, PartId::Torso);
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const int a = static_cast<int>(s.sample(j)[ta]);
    const int b = static_cast<int>(s.sample(j)[tb]);
    joint[{a, b}] += 1.0 / 20000;
    pa[a] += 1.0 / 20000;
    pb[b] += 1.0 / 20000;
  }
  double mi = 0.0;
  for (const auto& [k, v] : joint) mi += v * std::log(v / (pa[k.first] * pb[k.second]));
  EXPECT_LE(mi, 0.01);
}

TEST(FitGammas, LogitOfObservedFrequency) {
  // 7311 same-cell frames out of 10000: the maximizer is logit(0.7311).
  ingest::DetectionSequence seq;
  seq.model_arity = 3;
  seq.grid = {10, 10};
  for (int i = 0; i < 10000; ++i) {
    auto f = two_cell_toy(i < 7311);
    f.frame_index = i;
    seq.frames.push_back(std::move(f));
  }
  const PictorialModel tmpl(3, 1, 1.0, 0.0, true);
  FitOptions fo;
  fo.max_frames = 0;
  const auto fit = fit_gammas(std::span(&seq, 1), tmpl, fo);
  EXPECT_NEAR(fit.gamma1, std::log(0.7311 / 0.2689), 1e-3);
  EXPECT_FALSE(fit.gamma1_degenerate);
}

TEST(FitGammas, EvenSplitMeansNoPreference) {
  ingest::DetectionSequence seq;
  seq.model_arity = 3;
  seq.grid = {10, 10};
  for (int i = 0; i < 200; ++i) {
    auto f = two_cell_toy(i % 2 == 0);
    f.frame_index = i;
    seq.frames.push_back(std::move(f));
  }
  const auto fit = fit_gammas(std::span(&seq, 1), PictorialModel(3, 1, 1.0, 0.0, true));
  EXPECT_LT(fit.gamma1, 1e-2);
}

TEST(FitGammas, CoLocatedObservationsAreDegenerate) {
  ingest::DetectionSequence seq;
  seq.model_arity = 3;
  seq.grid = {10, 10};
  ingest::FrameDetections f;
  f.persons.push_back(person(1, {at(PartId::Torso, 1, 1)}, {at(PartId::LeftArm, 1, 1)}, {at(PartId::RightArm, 1, 1)}));
  seq.frames.push_back(f);
  const auto fit = fit_gammas(std::span(&seq, 1), PictorialModel(3, 1, 1.0, 0.0, true));
  EXPECT_TRUE(fit.gamma1_degenerate);
  EXPECT_DOUBLE_EQ(fit.gamma1, FitOptions{}.lower);
}
