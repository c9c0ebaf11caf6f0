#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soda/symbols.hpp"

namespace soda::ingest {

enum class PartId : std::uint8_t { Head, Torso, LeftArm, RightArm, LeftLeg, RightLeg };

inline constexpr std::size_t kPartCount = 6;

std::string_view part_key(PartId part) noexcept;
std::optional<PartId> part_from_key(std::string_view key) noexcept;

/// Part slots of the 3-part (torso, arms) and 5-part (torso, arms, legs)
/// models. The head is folded into the torso slot in both.
std::span<const PartId> model_parts(int arity);
bool is_valid_arity(int arity) noexcept;

struct PartState {
  PartId part_id = PartId::Torso;
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;  // unary log-evidence

  friend bool operator==(const PartState&, const PartState&) = default;
};

struct Person {
  std::int64_t id = 0;
  // candidates[part] lists detector hypotheses for that slot; empty means absent.
  std::array<std::vector<PartState>, kPartCount> candidates;

  const std::vector<PartState>& slot(PartId part) const { return candidates[static_cast<std::size_t>(part)]; }
  std::vector<PartState>& slot(PartId part) { return candidates[static_cast<std::size_t>(part)]; }

  friend bool operator==(const Person&, const Person&) = default;
};

struct FrameDetections {
  std::int64_t frame_index = 0;
  std::vector<Person> persons;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

struct Grid {
  std::int64_t width = 0;
  std::int64_t height = 0;

  bool contains(double x, double y) const noexcept {
    return x >= 0.0 && y >= 0.0 && x <= static_cast<double>(width) && y <= static_cast<double>(height);
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct DetectionSequence {
  std::string sequence_id;
  std::optional<std::string> label;
  int model_arity = 5;
  Grid grid;
  std::vector<FrameDetections> frames;

  friend bool operator==(const DetectionSequence&, const DetectionSequence&) = default;
};

enum class IssueKind {
  EmptySequence,
  InvalidGrid,
  InvalidArity,
  NonMonotoneFrames,
  NoPersons,
  DuplicatePerson,
  MissingPart,
  UnexpectedPart,
  NonFinite,
  OutOfGrid,
};

std::string_view to_string(IssueKind kind) noexcept;

struct ValidationIssue {
  std::optional<std::int64_t> frame_index;  // empty for sequence-level issues
  IssueKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
};

/// Checks every invariant of a detection sequence against a 3- or 5-part
/// model. Never throws; every violation becomes an issue.
ValidationReport validate(const DetectionSequence& seq, int model_arity);

/// Parses a detection stream: one header object, then one object per frame.
/// `source` names the stream in error messages.
DetectionSequence parse_detections(std::istream& in, const std::string& source = "<stream>");
DetectionSequence load_detections(const std::filesystem::path& path);

void write_detections(const DetectionSequence& seq, std::ostream& out);
void save_detections(const DetectionSequence& seq, const std::filesystem::path& path);

/// Symbol files: header `{"p":..,"n":..,"M":..}` then one line per frame.
SymbolSequence parse_symbols(std::istream& in, const std::string& source = "<stream>");
SymbolSequence load_symbols(const std::filesystem::path& path);
void write_symbols(const SymbolSequence& seq, std::ostream& out);
void save_symbols(const SymbolSequence& seq, const std::filesystem::path& path);

inline constexpr int kSymbolFormatVersion = 1;

}  // namespace soda::ingest
