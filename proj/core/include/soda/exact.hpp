#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace soda::info {

/// Fully specified joint pmf of two length-M sequences over alphabet p.
/// Entry index is the mixed-radix number (X_1 .. X_M, Y_1 .. Y_M) with X_1
/// most significant.
struct ProcessSpec {
  std::uint32_t p = 2;
  std::size_t frames = 1;
  std::vector<double> pmf;

  std::size_t states() const;
  /// Throws InvalidSpec on a size mismatch, InvalidPmf if entries are
  /// negative or do not sum to 1 within 1e-9, StateSpaceTooLarge past 1e7.
  void validate() const;
};

inline constexpr std::size_t kMaxSpecStates = 10'000'000;

enum class Direction {
  Forward,         // sum_m I(X^m; Y_m | Y^{m-1})
  Reverse,         // sum_m I(Y^m; X_m | X^{m-1})
  DelayedReverse,  // sum_m I(Y^{m-1}; X_m | X^{m-1})
};

/// Directed information with full pasts, in nats.
double exact_di(const ProcessSpec& spec, Direction direction);

/// I(X^M; Y^M) in nats.
double exact_mi(const ProcessSpec& spec);

}  // namespace soda::info
