#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace soda {

using Symbol = std::uint16_t;

inline constexpr std::uint32_t kMaxAlphabet = 4096;

/// M frames, each holding n quantized realizations over an alphabet of p
/// symbols. Realization j of every frame belongs to the same Gibbs draw
/// index, which is how frames are paired when histograms are built.
class SymbolSequence {
 public:
  SymbolSequence() = default;
  SymbolSequence(std::string sequence_id, std::uint32_t p, std::size_t n, std::size_t frames);

  const std::string& sequence_id() const noexcept { return sequence_id_; }
  void set_sequence_id(std::string id) { sequence_id_ = std::move(id); }
  const std::optional<std::string>& label() const noexcept { return label_; }
  void set_label(std::optional<std::string> label) { label_ = std::move(label); }

  std::uint32_t alphabet() const noexcept { return p_; }
  std::size_t realizations() const noexcept { return n_; }
  std::size_t frames() const noexcept { return frames_; }

  std::span<const Symbol> row(std::size_t m) const noexcept { return {data_.data() + m * n_, n_}; }
  std::span<Symbol> row(std::size_t m) noexcept { return {data_.data() + m * n_, n_}; }

  /// Frames [begin, begin + count) as a new sequence.
  SymbolSequence slice(std::size_t begin, std::size_t count) const;
  /// Frames in reverse order.
  SymbolSequence reversed() const;
  /// Frame m of the result is frame (m + offset) mod M of this sequence.
  SymbolSequence rotated(std::size_t offset) const;

  /// Throws SymbolOutOfRange if any symbol is >= p.
  void check() const;

  const std::vector<Symbol>& data() const noexcept { return data_; }

  friend bool operator==(const SymbolSequence&, const SymbolSequence&) = default;

 private:
  std::string sequence_id_;
  std::optional<std::string> label_;
  std::uint32_t p_ = 0;
  std::size_t n_ = 0;
  std::size_t frames_ = 0;
  std::vector<Symbol> data_;
};

}  // namespace soda
