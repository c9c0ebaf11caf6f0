#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "soda/classifier.hpp"
#include "soda/error.hpp"
#include "soda/random.hpp"

using namespace soda;
using namespace soda::cls;

namespace {

// Members of a class are noisy copies of a shared random prototype.
std::vector<SymbolSequence> toy_corpus(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  std::vector<SymbolSequence> out;
  RngStream rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    SymbolSequence proto("p", 4, 300, 6);
    for (std::size_t m = 0; m < 6; ++m)
      for (auto& v : proto.row(m)) v = static_cast<Symbol>(rng.below(4));
    for (std::size_t i = 0; i < per_class; ++i) {
      SymbolSequence s = proto;
      for (std::size_t m = 0; m < 6; ++m)
        for (auto& v : s.row(m))
          if (rng.bernoulli(0.3)) v = static_cast<Symbol>(rng.below(4));
      s.set_sequence_id("c" + std::to_string(c) + "_" + std::to_string(i));
      s.set_label(std::string(1, static_cast<char>('a' + c)));
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<std::string> labels_of(const std::vector<SymbolSequence>& corpus) {
  std::vector<std::string> l;
  for (const auto& s : corpus) l.push_back(*s.label());
  return l;
}

}  // namespace

TEST(PairwiseMatrix, SymmetricWithZeroDiagonal) {
  const auto corpus = toy_corpus(2, 3, 1);
  const auto m = pairwise_matrix(corpus, 1);
  ASSERT_EQ(m.ids.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(m.forward.at(i, i), 0.0);
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(m.sym.at(i, j), m.sym.at(j, i));
      if (i != j) {
        EXPECT_EQ(m.forward.at(i, j), info::directed_information(corpus[i], corpus[j], 1).value);
        EXPECT_EQ(m.sym.at(i, j), m.forward.at(i, j) + m.forward.at(j, i));
      }
    }
  }
}

TEST(PairwiseMatrix, ThreadCountDoesNotMatter) {
  const auto corpus = toy_corpus(2, 3, 2);
  const auto a = pairwise_matrix(corpus, 1, info::LambdaPolicy::closed_form(), 1);
  const auto b = pairwise_matrix(corpus, 1, info::LambdaPolicy::closed_form(), 3);
  EXPECT_EQ(a.forward, b.forward);
  EXPECT_EQ(a.sym, b.sym);
}

TEST(PairwiseMatrix, ErrorsNameThePair) {
  auto corpus = toy_corpus(1, 2, 3);
  corpus.push_back(SymbolSequence("odd", 4, 10, 6));
  try {
    pairwise_matrix(corpus, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("odd"), std::string::npos);
  }
}

TEST(Split, StratifiedAndSeeded) {
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) labels.push_back("a");
  for (int i = 0; i < 6; ++i) labels.push_back("b");
  for (int i = 0; i < 4; ++i) labels.push_back("c");
  const auto s = split(labels, 0.5, 9);
  EXPECT_EQ(s.train.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  std::map<std::string, int> per_class;
  for (auto i : s.train) ++per_class[labels[i]];
  EXPECT_EQ(per_class["a"], 5);
  EXPECT_EQ(per_class["b"], 3);
  EXPECT_EQ(per_class["c"], 2);
  EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 20u);

  const auto again = split(labels, 0.5, 9);
  EXPECT_EQ(again.train, s.train);
  bool differs = false;
  for (std::uint64_t seed = 10; seed < 20 && !differs; ++seed) differs = split(labels, 0.5, seed).train != s.train;
  EXPECT_TRUE(differs);
}

TEST(Split, KeepsOneOnEachSide) {
  const std::vector<std::string> labels{"a", "a", "b", "b", "b"};
  const auto s = split(labels, 0.05, 1);
  std::map<std::string, int> train, test;
  for (auto i : s.train) ++train[labels[i]];
  for (auto i : s.test) ++test[labels[i]];
  EXPECT_EQ(train["a"], 1);
  EXPECT_EQ(test["a"], 1);
  EXPECT_GE(train["b"], 1);
  EXPECT_GE(test["b"], 1);
  const std::vector<std::string> lonely{"a", "a", "b"};
  try {
    split(lonely, 0.5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClassTooSmall);
  }
}

TEST(NearestNeighbor, PicksTheMostSimilar) {
  DiMatrix m;
  m.ids = {"t0", "t1", "t2", "q"};
  m.forward = Matrix(4, 4);
  m.sym = Matrix(4, 4);
  auto set = [&](std::size_t i, std::size_t j, double v) { m.sym.at(i, j) = m.sym.at(j, i) = v; };
  set(3, 0, 0.2);
  set(3, 1, 0.9);
  set(3, 2, 0.5);
  const std::size_t train[] = {0, 1, 2};
  const std::string tl[] = {"x", "y", "x"};
  const std::size_t test[] = {3};
  const auto one = nn_classify(m, train, tl, test, 1);
  EXPECT_EQ(one[0].predicted, "y");
  EXPECT_EQ(one[0].class_scores, (std::vector<double>{0.5, 0.9}));
  const auto three = nn_classify(m, train, tl, test, 3);
  EXPECT_EQ(three[0].predicted, "x");
}

TEST(NearestNeighbor, TiesGoToLargerSimilarityThenLabel) {
  DiMatrix m;
  m.ids = {"t0", "t1", "q"};
  m.forward = Matrix(3, 3);
  m.sym = Matrix(3, 3);
  m.sym.at(2, 0) = m.sym.at(0, 2) = 0.4;
  m.sym.at(2, 1) = m.sym.at(1, 2) = 0.6;
  const std::size_t train[] = {0, 1};
  const std::size_t test[] = {2};
  const std::string tl[] = {"b", "a"};
  EXPECT_EQ(nn_classify(m, train, tl, test, 2)[0].predicted, "a");
  m.sym.at(2, 1) = m.sym.at(1, 2) = 0.4;
  EXPECT_EQ(nn_classify(m, train, tl, test, 2)[0].predicted, "a");
  const std::size_t none[] = {0};
  EXPECT_THROW(nn_classify(m, {}, {}, test, 1), Error);
  const std::string one_label[] = {"b"};
  EXPECT_THROW(nn_classify(m, none, one_label, none, 1), Error);
}

TEST(Evaluate, ConfusionAccuracyAndAp) {
  std::vector<Prediction> preds{{0, "a", {0.9, 0.1}}, {1, "b", {0.2, 0.8}}, {2, "a", {0.7, 0.6}}, {3, "b", {0.1, 0.3}}};
  const std::vector<std::string> truth{"a", "b", "b", "b"};
  const std::vector<std::string> classes{"a", "b"};
  const auto r = evaluate(preds, truth, classes);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.total, 4u);
  EXPECT_EQ(r.confusion, (std::vector<std::vector<std::size_t>>{{1, 0}, {1, 2}}));
  // Class a: ranking by score 0.9, 0.7, 0.2, 0.1 puts its only member first.
  EXPECT_DOUBLE_EQ(r.per_class_ap[0], 1.0);
  // Class b: scores 0.8(b) 0.6(b) 0.3(b) 0.1(a): AP = 1.
  EXPECT_DOUBLE_EQ(r.per_class_ap[1], 1.0);
  preds[3].class_scores = {0.1, 0.05};
  preds[0].class_scores = {0.9, 0.5};
  // b ranking: 0.8(b) 0.6(b) 0.5(a) 0.05(b): AP = (1 + 1 + 3/4) / 3.
  EXPECT_NEAR(evaluate(preds, truth, classes).per_class_ap[1], (1.0 + 1.0 + 0.75) / 3.0, 1e-15);
}

TEST(EndToEnd, ToyCorpusIsSeparable) {
  const auto corpus = toy_corpus(3, 6, 4);
  const auto labels = labels_of(corpus);
  const auto m = pairwise_matrix(corpus, 1);
  const auto s = split(labels, 0.5, 5);
  std::vector<std::string> tl;
  for (auto i : s.train) tl.push_back(labels[i]);
  const auto preds = nn_classify(m, s.train, tl, s.test, 1);
  std::vector<std::string> truth;
  for (auto i : s.test) truth.push_back(labels[i]);
  const auto r = evaluate(preds, truth, class_list(tl));
  EXPECT_EQ(r.accuracy, 1.0);
  std::ostringstream o;
  write_report_json(o, r);
  EXPECT_NE(o.str().find("\"mean_ap\""), std::string::npos);
}
