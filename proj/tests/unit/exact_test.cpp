#include <gtest/gtest.h>

#include <cmath>

#include "soda/error.hpp"
#include "soda/exact.hpp"
#include "soda/random.hpp"

using namespace soda;
using namespace soda::info;

namespace {

// Index of (x_1..x_M, y_1..y_M) with x_1 most significant.
std::size_t state_index(const std::vector<int>& xs, const std::vector<int>& ys, std::uint32_t p) {
  std::size_t idx = 0;
  for (int v : xs) idx = idx * p + static_cast<std::size_t>(v);
  for (int v : ys) idx = idx * p + static_cast<std::size_t>(v);
  return idx;
}

ProcessSpec random_spec(std::uint32_t p, std::size_t frames, std::uint64_t seed) {
  ProcessSpec s{p, frames, {}};
  s.pmf.resize(s.states());
  RngStream rng(seed);
  double total = 0.0;
  for (double& v : s.pmf) total += (v = rng.uniform() + 1e-3);
  for (double& v : s.pmf) v /= total;
  return s;
}

}  // namespace

TEST(ExactOracle, LagOneCopyOfFairBits) {
  // X_1, X_2, Y_1 fair and independent; Y_2 = X_1.
  ProcessSpec s{2, 2, std::vector<double>(16, 0.0)};
  for (int x1 = 0; x1 < 2; ++x1)
    for (int x2 = 0; x2 < 2; ++x2)
      for (int y1 = 0; y1 < 2; ++y1) s.pmf[state_index({x1, x2}, {y1, x1}, 2)] = 0.125;
  EXPECT_NEAR(exact_di(s, Direction::Forward), std::log(2.0), 1e-12);
  EXPECT_NEAR(exact_di(s, Direction::DelayedReverse), 0.0, 1e-12);
  EXPECT_NEAR(exact_mi(s), std::log(2.0), 1e-12);
  // Y_2 repeats X_1, which the reverse sum already conditions on.
  EXPECT_NEAR(exact_di(s, Direction::Reverse), 0.0, 1e-12);
}

TEST(ExactOracle, IndependentProcessesCarryNothing) {
  ProcessSpec s{3, 2, std::vector<double>(81, 1.0 / 81.0)};
  EXPECT_NEAR(exact_di(s, Direction::Forward), 0.0, 1e-12);
  EXPECT_NEAR(exact_mi(s), 0.0, 1e-12);
}

TEST(ExactOracle, DecompositionOnRandomSpecs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_spec(2 + seed % 2, 1 + seed % 3, seed);
    EXPECT_NEAR(exact_di(s, Direction::Forward) + exact_di(s, Direction::DelayedReverse), exact_mi(s), 1e-12);
  }
}

TEST(ExactOracle, Validation) {
  ProcessSpec wrong_size{2, 2, std::vector<double>(8, 0.125)};
  try {
    wrong_size.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
  }
  ProcessSpec bad_sum{2, 1, {0.5, 0.5, 0.5, 0.5}};
  try {
    bad_sum.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPmf);
  }
  ProcessSpec huge{4, 12, {}};
  try {
    huge.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateSpaceTooLarge);
  }
}
