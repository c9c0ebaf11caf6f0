#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "soda/ingest.hpp"

namespace soda::synth {

struct ClassTemplate {
  std::string label = "a";
  std::size_t lag = 1;
  double coupling = 0.75;  // probability a frame inside the window is a copy
  /// Half-open frame range [first, second) of the target where copying may
  /// happen; the whole sequence when absent.
  std::optional<std::pair<std::size_t, std::size_t>> active_window;
  double step = 1.0;  // walk step standard deviation, grid units
};

struct CouplingSpec {
  std::vector<ClassTemplate> classes{ClassTemplate{}};
  std::size_t persons = 2;
  int arity = 5;
  std::size_t frames = 40;
  double noise = 0.25;  // position jitter of copied frames, grid units
  std::int64_t width = 64;
  std::int64_t height = 48;
  std::size_t candidates = 3;     // per part slot, true position included
  double distractor_radius = 6.0; // distractors fall within this distance
  double true_score = 1.0;        // mean score of the true candidate
  double score_noise = 0.5;       // score standard deviation

  /// Throws InvalidSpec when a field is out of range.
  void validate() const;
};

struct CopiedFrame {
  std::size_t target = 0;  // frame of the driven sequence
  std::size_t source = 0;  // frame of the driving sequence it copies
};

struct PairTruth {
  std::string source_id;
  std::string target_id;
  std::size_t lag = 0;
  double coupling = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> active_window;
  std::vector<CopiedFrame> copied;
};

struct CoupledPair {
  ingest::DetectionSequence x;
  ingest::DetectionSequence y;
  PairTruth truth;
};

/// X is a fresh walk; Y follows its own walk except that each frame inside
/// the active window (and at or past `lag`) is, with probability `coupling`,
/// X's frame m - lag with every candidate position jittered by N(0, noise).
/// Uses the template `class_index` of the spec.
CoupledPair gen_coupled_pair(const CouplingSpec& spec, std::uint64_t seed, std::size_t class_index = 0);

/// Frames in reverse order, relabeled 0 .. M-1. An involution on sequences
/// whose frames are already indexed 0 .. M-1.
ingest::DetectionSequence reverse_time(const ingest::DetectionSequence& seq);

struct LabeledCorpus {
  std::vector<ingest::DetectionSequence> sequences;
  /// Per sequence: how it was copied from its class prototype.
  std::vector<PairTruth> members;
  /// Every unordered pair (i < j) and whether both share a prototype.
  struct PairInfo {
    std::size_t a = 0;
    std::size_t b = 0;
    bool same_class = false;
  };
  std::vector<PairInfo> pairs;
};

/// per_class sequences for every class. Each class draws a prototype walk
/// with its own step size; members are coupled copies of the prototype at
/// the class lag and coupling. Every sequence has its own seeded sub-stream.
LabeledCorpus gen_corpus(const CouplingSpec& spec, std::size_t per_class, std::uint64_t seed);

/// Flat JSON form used by the command line; unknown keys are rejected.
CouplingSpec parse_coupling_spec(std::istream& in);
void write_coupling_spec(std::ostream& out, const CouplingSpec& spec);

void write_truth_json(std::ostream& out, const std::vector<PairTruth>& truth,
                      const std::vector<LabeledCorpus::PairInfo>& pairs = {});

}  // namespace soda::synth
