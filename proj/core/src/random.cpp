#include "soda/random.hpp"

#include <cmath>
#include <numbers>

namespace soda {

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  for (;;) {
    const std::uint64_t x = next_bits();
    if (x < limit) return x % n;
  }
}

double RngStream::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace soda
