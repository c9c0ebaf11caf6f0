#include "soda/symbols.hpp"

#include <algorithm>
#include <string>

#include "soda/error.hpp"

namespace soda {

SymbolSequence::SymbolSequence(std::string sequence_id, std::uint32_t p, std::size_t n, std::size_t frames)
    : sequence_id_(std::move(sequence_id)), p_(p), n_(n), frames_(frames), data_(n * frames, 0) {
  if (p < 1 || p > kMaxAlphabet)
    throw Error(ErrorCode::InvalidArgument, "alphabet size must be in [1, 4096], got " + std::to_string(p));
}

SymbolSequence SymbolSequence::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > frames_)
    throw Error(ErrorCode::WindowTooLarge, "slice [" + std::to_string(begin) + ", " +
                                               std::to_string(begin + count) + ") exceeds " +
                                               std::to_string(frames_) + " frames");
  SymbolSequence out(sequence_id_, p_, n_, count);
  out.label_ = label_;
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(begin * n_), count * n_, out.data_.begin());
  return out;
}

SymbolSequence SymbolSequence::reversed() const {
  SymbolSequence out(sequence_id_, p_, n_, frames_);
  out.label_ = label_;
  for (std::size_t m = 0; m < frames_; ++m) {
    const auto src = row(frames_ - 1 - m);
    std::copy(src.begin(), src.end(), out.row(m).begin());
  }
  return out;
}

SymbolSequence SymbolSequence::rotated(std::size_t offset) const {
  SymbolSequence out(sequence_id_, p_, n_, frames_);
  out.label_ = label_;
  if (frames_ == 0) return out;
  for (std::size_t m = 0; m < frames_; ++m) {
    const auto src = row((m + offset) % frames_);
    std::copy(src.begin(), src.end(), out.row(m).begin());
  }
  return out;
}

void SymbolSequence::check() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] >= p_)
      throw Error(ErrorCode::SymbolOutOfRange, "symbol " + std::to_string(data_[i]) + " at frame " +
                                                   std::to_string(i / std::max<std::size_t>(n_, 1)) +
                                                   " is outside alphabet of size " + std::to_string(p_));
  }
}

}  // namespace soda
