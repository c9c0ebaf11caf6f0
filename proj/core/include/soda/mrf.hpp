#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "soda/ingest.hpp"

namespace soda::mrf {

/// One random variable of the field: the candidate chosen for one part slot
/// of one person.
struct Variable {
  std::size_t person = 0;  // position in the frame's id-sorted person list
  ingest::PartId part = ingest::PartId::Torso;
};

enum class EdgeKind { Intra, Inter };

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  EdgeKind kind = EdgeKind::Intra;
};

/// Pictorial-structure field over the part candidates of every person in a
/// frame. Each person is a star (torso to every limb) weighted by gamma1;
/// with interaction enabled, every pair of persons is linked torso-torso,
/// left arm-left arm and right arm-right arm, weighted by gamma2. A disabled
/// interaction drops those edges, which makes the inter-person potential
/// constant.
class PictorialModel {
 public:
  PictorialModel(int arity, std::size_t persons, double gamma1, double gamma2, bool interaction);

  int arity() const noexcept { return arity_; }
  std::size_t persons() const noexcept { return persons_; }
  double gamma1() const noexcept { return gamma1_; }
  double gamma2() const noexcept { return gamma2_; }
  bool interaction_enabled() const noexcept { return interaction_; }

  /// Variables in sweep order: person-major, parts in model order.
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t variable_index(std::size_t person, ingest::PartId part) const;

  double weight(EdgeKind kind) const noexcept { return kind == EdgeKind::Intra ? gamma1_ : gamma2_; }

  PictorialModel with_gammas(double gamma1, double gamma2) const {
    return PictorialModel(arity_, persons_, gamma1, gamma2, interaction_);
  }

 private:
  int arity_;
  std::size_t persons_;
  double gamma1_;
  double gamma2_;
  bool interaction_;
  std::vector<Variable> variables_;
  std::vector<Edge> edges_;
};

/// Candidate index chosen for each model variable.
struct FrameConfiguration {
  std::vector<std::uint32_t> assignment;

  friend bool operator==(const FrameConfiguration&, const FrameConfiguration&) = default;
};

/// n joint realizations of one frame, stored row-major (sample, variable).
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::int64_t frame_index, std::size_t variables, std::size_t n)
      : frame_index_(frame_index), variables_(variables), n_(n), data_(variables * n, 0) {}

  std::int64_t frame_index() const noexcept { return frame_index_; }
  std::size_t size() const noexcept { return n_; }
  std::size_t variables() const noexcept { return variables_; }

  std::span<const std::uint32_t> sample(std::size_t j) const noexcept { return {data_.data() + j * variables_, variables_}; }
  std::span<std::uint32_t> sample(std::size_t j) noexcept { return {data_.data() + j * variables_, variables_}; }
  FrameConfiguration configuration(std::size_t j) const {
    const auto s = sample(j);
    return {{s.begin(), s.end()}};
  }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  std::int64_t frame_index_ = 0;
  std::size_t variables_ = 0;
  std::size_t n_ = 0;
  std::vector<std::uint32_t> data_;
};

/// Exact joint distribution of a small frame, one entry per configuration.
/// State k decodes in mixed radix with the first variable varying slowest.
struct DistributionTable {
  std::vector<std::uint32_t> radix;  // candidate count per variable
  std::vector<double> probs;

  FrameConfiguration state(std::size_t k) const;
  std::size_t index_of(const FrameConfiguration& cfg) const;
};

inline constexpr std::size_t kMaxExactStates = 1'000'000;

/// Unary scores plus -gamma * squared center distance over every edge.
double log_potential(const PictorialModel& model, const ingest::FrameDetections& frame,
                     const FrameConfiguration& cfg);

DistributionTable exact_joint(const PictorialModel& model, const ingest::FrameDetections& frame);

struct GibbsOptions {
  std::size_t burnin = 500;
  std::size_t samples = 1000;
};

/// Systematic-scan Gibbs sampler. Every sweep visits the variables in model
/// order and redraws each from its exact conditional by inverse CDF. The
/// uniform for (sweep s, variable v) is draw s * V + v of the stream keyed by
/// `seed`, so two frames sampled with the same seed share their random
/// numbers draw for draw. The chain starts from candidate 0 everywhere.
SampleSet gibbs_sample(const PictorialModel& model, const ingest::FrameDetections& frame,
                       const GibbsOptions& options, std::uint64_t seed);

struct FitOptions {
  double lower = 1e-4;
  double upper = 1e2;
  double tolerance = 1e-6;
  int passes = 2;
  std::size_t max_frames = 200;          // frames used, evenly spaced over the corpus
  std::size_t exact_state_limit = 20000;  // above this, log Z is estimated
  std::size_t importance_draws = 1000;
  std::uint64_t seed = 0x5eed;
};

struct GammaFit {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  bool gamma1_degenerate = false;
  bool gamma2_degenerate = false;
  double log_likelihood = 0.0;
  std::size_t frames_used = 0;

  bool degenerate() const noexcept { return gamma1_degenerate || gamma2_degenerate; }
};

/// Maximum-likelihood gamma1/gamma2 for the top-score configuration of every
/// frame, by coordinate-wise golden-section search. gamma2 is only searched
/// when the template has more than one person and interaction enabled;
/// otherwise the template's gamma2 is returned unchanged.
GammaFit fit_gammas(std::span<const ingest::DetectionSequence> sequences, const PictorialModel& model_template,
                    const FitOptions& options = {});

/// Candidate with the highest score in each slot, lowest index on ties.
FrameConfiguration top_score_configuration(const PictorialModel& model, const ingest::FrameDetections& frame);

/// Candidate positions and scores of a frame laid out per model variable.
class FrameField {
 public:
  FrameField(const PictorialModel& model, const ingest::FrameDetections& frame);

  std::size_t variables() const noexcept { return cands_.size(); }
  std::size_t candidates(std::size_t v) const noexcept { return cands_[v].size(); }
  const ingest::PartState& candidate(std::size_t v, std::size_t c) const noexcept { return *cands_[v][c]; }
  /// Product of candidate counts, saturating at SIZE_MAX.
  std::size_t state_count() const noexcept;

 private:
  std::vector<std::vector<const ingest::PartState*>> cands_;
};

}  // namespace soda::mrf
