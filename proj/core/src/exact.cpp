#include "soda/exact.hpp"

#include <cmath>
#include <string>

#include "soda/error.hpp"

namespace soda::info {

namespace {

// Entropy of the marginal over the listed sequence positions. Position i < M
// is X_{i+1}; position M + i is Y_{i+1}.
double marginal_entropy(const ProcessSpec& spec, const std::vector<std::size_t>& keep) {
  if (keep.empty()) return 0.0;
  const std::size_t axes = 2 * spec.frames;
  std::size_t marg_size = 1;
  for (std::size_t i = 0; i < keep.size(); ++i) marg_size *= spec.p;
  std::vector<double> marg(marg_size, 0.0);
  std::vector<std::uint32_t> digit(axes, 0);
  for (std::size_t s = 0; s < spec.pmf.size(); ++s) {
    std::size_t key = 0;
    for (std::size_t a : keep) key = key * spec.p + digit[a];
    marg[key] += spec.pmf[s];
    for (std::size_t a = axes; a-- > 0;) {
      if (++digit[a] < spec.p) break;
      digit[a] = 0;
    }
  }
  double h = 0.0;
  for (double q : marg)
    if (q > 0.0) h -= q * std::log(q);
  return h;
}

std::vector<std::size_t> range(std::size_t offset, std::size_t count) {
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back(offset + i);
  return v;
}

std::vector<std::size_t> join(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// I(A; B | C) from four marginal entropies.
double cmi(const ProcessSpec& spec, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
           const std::vector<std::size_t>& c) {
  return marginal_entropy(spec, join(a, c)) + marginal_entropy(spec, join(b, c)) -
         marginal_entropy(spec, join(join(a, b), c)) - marginal_entropy(spec, c);
}

}  // namespace

std::size_t ProcessSpec::states() const {
  std::size_t s = 1;
  for (std::size_t i = 0; i < 2 * frames; ++i) {
    if (s > kMaxSpecStates) return s;
    s *= p;
  }
  return s;
}

void ProcessSpec::validate() const {
  if (p < 1 || frames < 1) throw Error(ErrorCode::InvalidSpec, "process needs p >= 1 and at least one frame");
  const std::size_t s = states();
  if (s > kMaxSpecStates)
    throw Error(ErrorCode::StateSpaceTooLarge, "process has more than " + std::to_string(kMaxSpecStates) + " states");
  if (pmf.size() != s)
    throw Error(ErrorCode::InvalidSpec, "pmf has " + std::to_string(pmf.size()) + " entries, expected " +
                                            std::to_string(s));
  double total = 0.0;
  for (double q : pmf) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw Error(ErrorCode::InvalidPmf, "pmf has a negative or non-finite entry");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidPmf, "pmf sums to " + std::to_string(total));
}

double exact_di(const ProcessSpec& spec, Direction direction) {
  spec.validate();
  const std::size_t M = spec.frames;
  const std::size_t src = direction == Direction::Forward ? 0 : M;  // sequence that drives
  const std::size_t dst = direction == Direction::Forward ? M : 0;  // sequence that is driven
  double total = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t src_len = direction == Direction::DelayedReverse ? m : m + 1;
    if (src_len == 0) continue;
    total += cmi(spec, range(src, src_len), {dst + m}, range(dst, m));
  }
  return total;
}

double exact_mi(const ProcessSpec& spec) {
  spec.validate();
  const std::size_t M = spec.frames;
  return marginal_entropy(spec, range(0, M)) + marginal_entropy(spec, range(M, M)) -
         marginal_entropy(spec, range(0, 2 * M));
}

}  // namespace soda::info
