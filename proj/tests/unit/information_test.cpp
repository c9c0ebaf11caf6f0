// Estimator checks. Expected values come from tests/oracle/derive_values.py,
// which works on dense arrays and shares no code with the library.
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "soda/error.hpp"
#include "soda/information.hpp"
#include "soda/random.hpp"

using namespace soda;
using namespace soda::info;

namespace {

JointHistogram histogram_of(const std::vector<std::uint64_t>& counts) {
  std::vector<JointHistogram::Entry> entries;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) entries.emplace_back(i, counts[i]);
  return JointHistogram({static_cast<std::uint32_t>(counts.size())}, entries);
}

SymbolSequence from_rows(const std::vector<std::vector<Symbol>>& rows, std::uint32_t p) {
  SymbolSequence s("s", p, rows.front().size(), rows.size());
  for (std::size_t m = 0; m < rows.size(); ++m)
    for (std::size_t j = 0; j < rows[m].size(); ++j) s.row(m)[j] = rows[m][j];
  return s;
}

SymbolSequence random_sequence(std::uint32_t p, std::size_t n, std::size_t frames, std::uint64_t seed) {
  RngStream rng(seed);
  SymbolSequence s("r", p, n, frames);
  for (std::size_t m = 0; m < frames; ++m)
    for (auto& v : s.row(m)) v = static_cast<Symbol>(rng.below(p));
  return s;
}

const std::vector<std::vector<Symbol>> kX = {{0, 1, 2, 0, 1, 2, 0, 1}, {1, 1, 0, 2, 2, 0, 1, 0}, {2, 0, 1, 1, 0, 2, 2, 1}};
const std::vector<std::vector<Symbol>> kY = {{0, 0, 1, 2, 1, 2, 0, 1}, {0, 1, 2, 0, 1, 2, 0, 1}, {1, 1, 0, 2, 2, 0, 1, 0}};

}  // namespace

TEST(Shrinkage, ClosedFormIntensity) {
  const auto est = shrinkage_lambda(histogram_of({5, 3, 2, 0}));
  EXPECT_NEAR(est.value, 0.5299145299145299, 1e-15);
  EXPECT_FALSE(est.zero_variance);
}

TEST(Shrinkage, UniformCountsHitTheTarget) {
  const auto est = shrinkage_lambda(histogram_of({4, 4, 4, 4}));
  EXPECT_EQ(est.value, 1.0);
  EXPECT_TRUE(est.zero_variance);
}

TEST(Shrinkage, ExplicitUniformTargetMatchesDefault) {
  const auto h = histogram_of({7, 1, 0, 2, 5});
  const std::vector<double> t(5, 0.2);
  EXPECT_NEAR(shrinkage_lambda(h, t).value, shrinkage_lambda(h).value, 1e-15);
}

TEST(Shrinkage, TargetMustBeADistribution) {
  const auto h = histogram_of({1, 2});
  const std::vector<double> bad{0.7, 0.7};
  EXPECT_THROW(shrinkage_lambda(h, bad), Error);
  const std::vector<double> wrong_size{1.0};
  EXPECT_THROW(shrinkage_lambda(h, wrong_size), Error);
}

TEST(Shrinkage, NeedsTwoObservations) {
  try {
    shrinkage_lambda(histogram_of({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}

TEST(Shrinkage, ShrunkEntropy) {
  const auto h = histogram_of({5, 3, 2, 0});
  const auto est = shrink(h, shrinkage_lambda(h).value);
  EXPECT_NEAR(entropy(est), 1.326596929160596, 1e-14);
  EXPECT_NEAR(entropy(shrink(h, 0.0)), 1.0296530140645737, 1e-14);
  double sum = 0.0;
  for (double v : est.theta_shrunk) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Shrinkage, SparseMarginalEntropyMatchesDense) {
  // 3 x 4 joint; marginal over axis 1 of the shrunk joint, computed densely.
  const JointHistogram h({3, 4}, {{0, 4}, {5, 2}, {6, 1}, {11, 3}});
  const double lambda = 0.35;
  const auto dense = shrink(h, lambda);
  std::vector<double> marg(4, 0.0);
  for (std::size_t c = 0; c < 12; ++c) marg[c % 4] += dense.theta_shrunk[c];
  const std::size_t axis[] = {1};
  EXPECT_NEAR(shrunk_marginal_entropy(h, axis, lambda), entropy(marg), 1e-14);
  const std::size_t both[] = {0, 1};
  EXPECT_NEAR(shrunk_marginal_entropy(h, both, lambda), entropy(dense), 1e-14);
}

TEST(Shrinkage, CrossValidatedIntensity) {
  EXPECT_DOUBLE_EQ(cross_validated_lambda(histogram_of({5, 3, 2, 0})), 0.2);
  EXPECT_DOUBLE_EQ(cross_validated_lambda(histogram_of({40, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1})), 0.25);
}

TEST(Shrinkage, ResolvePolicies) {
  const auto h = histogram_of({5, 3, 2, 0});
  EXPECT_DOUBLE_EQ(resolve_lambda(h, LambdaPolicy::fixed_value(0.4)), 0.4);
  EXPECT_DOUBLE_EQ(resolve_lambda(h, LambdaPolicy::none()), 0.0);
  EXPECT_DOUBLE_EQ(resolve_lambda(h, LambdaPolicy::cross_validated()), 0.2);
  EXPECT_THROW(resolve_lambda(h, LambdaPolicy::fixed_value(1.5)), Error);
}

TEST(ConditionalMi, DiStepAgainstOracle) {
  const std::vector<Symbol> x{0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0};
  const std::vector<Symbol> yn{0, 1, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0};
  const std::vector<Symbol> yp{1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1};
  const std::span<const Symbol> xr[] = {x};
  const std::span<const Symbol> ypr[] = {yp};
  EXPECT_NEAR(di_step(xr, yn, ypr, 2, 2, LambdaPolicy::none()).value, 0.3748900964125389, 1e-14);
  EXPECT_NEAR(di_step(xr, yn, ypr, 2, 2, LambdaPolicy::fixed_value(0.3)).value, 0.14895643666428937, 1e-14);
  const auto closed = di_step(xr, yn, ypr, 2, 2);
  EXPECT_EQ(closed.lambda, 1.0);
  EXPECT_NEAR(closed.value, 0.0, 1e-14);
}

TEST(ConditionalMi, NonNegativeOnRandomData) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_sequence(4, 60, 3, seed);
    const std::span<const Symbol> xr[] = {s.row(0)};
    const std::span<const Symbol> yp[] = {s.row(2)};
    for (double l : {0.0, 0.2, 0.9}) EXPECT_GE(di_step(xr, s.row(1), yp, 4, 4, LambdaPolicy::fixed_value(l)).value, -1e-12);
  }
}

TEST(DirectedInformation, MatchesOracle) {
  const auto x = from_rows(kX, 3);
  const auto y = from_rows(kY, 3);
  const double ml[] = {1.2945693260330138, 1.7328679513998633, 1.2554823251787537};
  const double fixed[] = {0.4987263023044539, 1.0771574386111251, 0.9327166522198935};
  const double closed[] = {0.0, 0.11469540703502235, 0.20808069814730334};
  for (int k = 0; k <= 2; ++k) {
    EXPECT_NEAR(directed_information(x, y, k, LambdaPolicy::none()).value, ml[k], 1e-13) << k;
    EXPECT_NEAR(directed_information(x, y, k, LambdaPolicy::fixed_value(0.3)).value, fixed[k], 1e-13) << k;
    EXPECT_NEAR(directed_information(x, y, k).value, closed[k], 1e-13) << k;
  }
}

TEST(DirectedInformation, PerStepSumsToValue) {
  const auto x = random_sequence(3, 200, 6, 1);
  const auto y = random_sequence(3, 200, 6, 2);
  const auto r = directed_information(x, y, 1);
  ASSERT_EQ(r.per_step.size(), 6u);
  ASSERT_EQ(r.lambdas.size(), 6u);
  double acc = 0.0;
  for (double v : r.per_step) acc += v;
  EXPECT_EQ(acc, r.value);
}

TEST(DirectedInformation, RejectsBadInput) {
  const auto x = random_sequence(3, 20, 4, 1);
  const auto short_n = random_sequence(3, 19, 4, 2);
  EXPECT_THROW(directed_information(x, x, 3), Error);
  EXPECT_THROW(directed_information(x, x, -1), Error);
  try {
    directed_information(x, short_n, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(DirectedInformation, UnequalLengthsUseTheCommonPrefix) {
  const auto x = random_sequence(3, 100, 6, 5);
  const auto y = random_sequence(3, 100, 4, 6);
  EXPECT_EQ(directed_information(x, y, 1).value, directed_information(x.slice(0, 4), y, 1).value);
}

TEST(DirectedInformation, MasseyDecompositionUnderPlugIn) {
  // Without shrinkage every term is a plug-in functional of the same empirical
  // joint, so DI(X->Y) + delayed DI(Y->X) equals the plug-in MI at full order.
  const auto x = random_sequence(2, 400, 3, 11);
  auto y = random_sequence(2, 400, 3, 12);
  for (std::size_t j = 0; j < 400; j += 2) y.row(1)[j] = x.row(0)[j];
  const int k = 2;
  const double fwd = directed_information(x, y, k, LambdaPolicy::none()).value;
  const double rev = delayed_reverse_di(x, y, k, LambdaPolicy::none()).value;
  const double mi = mutual_information(x, y, k, LambdaPolicy::none()).value;
  EXPECT_NEAR(fwd + rev, mi, 1e-10);
}

TEST(MutualInformation, BitSymmetric) {
  const auto x = random_sequence(4, 150, 5, 21);
  const auto y = random_sequence(4, 150, 5, 22);
  for (int k = 0; k <= 2; ++k) {
    EXPECT_EQ(mutual_information(x, y, k).value, mutual_information(y, x, k).value);
    EXPECT_EQ(symmetrized_di(x, y, k), symmetrized_di(y, x, k));
  }
}

TEST(MutualInformation, SymmetrizedIsSumOfDirections) {
  const auto x = random_sequence(3, 80, 4, 31);
  const auto y = random_sequence(3, 80, 4, 32);
  EXPECT_EQ(symmetrized_di(x, y, 1), directed_information(x, y, 1).value + directed_information(y, x, 1).value);
}

TEST(DirectedInformation, CopyChannelFavorsTheSource) {
  auto x = random_sequence(4, 20000, 6, 41);
  auto y = random_sequence(4, 20000, 6, 42);
  for (std::size_t m = 1; m < 6; ++m)
    for (std::size_t j = 0; j < 20000; ++j) y.row(m)[j] = x.row(m - 1)[j];
  // Each of the five copied steps carries ln 4; the plug-in bias is about
  // 0.005 per step at this n.
  const auto ml = LambdaPolicy::none();
  EXPECT_NEAR(directed_information(x, y, 1, ml).value, 5 * std::log(4.0), 0.1);
  EXPECT_LT(directed_information(y, x, 1, ml).value, 0.1);
  // Shrinkage pulls toward independence but keeps the ordering.
  const double fwd = directed_information(x, y, 1).value;
  const double rev = directed_information(y, x, 1).value;
  EXPECT_LT(fwd, 5 * std::log(4.0));
  EXPECT_GT(fwd, 5.0);
  EXPECT_LT(rev, 0.1);
}

TEST(DirectedInformation, IndependentOfEvaluationOrder) {
  const auto x = random_sequence(5, 300, 5, 51);
  const auto y = random_sequence(5, 300, 5, 52);
  const double a = directed_information(x, y, 2).value;
  directed_information(y, x, 2);
  EXPECT_EQ(directed_information(x, y, 2).value, a);
}
