#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "soda/ingest.hpp"
#include "soda/mrf.hpp"
#include "soda/symbols.hpp"

namespace soda::quant {

/// p centroids in the realization feature space: the (x / width, y / height)
/// of every model variable's chosen candidate, concatenated in model order
/// and centered on the frame's mean over its n realizations.
struct Codebook {
  std::uint32_t p = 0;
  std::size_t feature_dim = 0;
  std::vector<double> centroids;  // row-major p x feature_dim

  std::span<const double> centroid(std::size_t k) const noexcept {
    return {centroids.data() + k * feature_dim, feature_dim};
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

/// Samples of one frame together with the detections they index into.
struct FrameSamples {
  const mrf::SampleSet* samples = nullptr;
  const ingest::FrameDetections* frame = nullptr;
  const ingest::Grid* grid = nullptr;  // overrides the shared grid when set
};

struct CodebookOptions {
  std::size_t max_iterations = 100;
  double relative_tolerance = 1e-6;
  std::size_t max_training_points = 20000;
};

/// Flattens every realization into feature vectors (row-major, n x dim),
/// minus the mean feature vector of the frame.
std::vector<double> realization_features(const mrf::PictorialModel& model, const mrf::SampleSet& samples,
                                         const ingest::FrameDetections& frame, const ingest::Grid& grid);

/// k-means (k = p) seeded by farthest-point initialization. The first
/// centroid is a seeded draw; each next one is the point farthest from the
/// centroids so far (lowest index on ties). Lloyd iterations stop after
/// max_iterations or once inertia changes by less than relative_tolerance.
/// When the pool exceeds max_training_points, an evenly strided subset with
/// a seeded start is used.
Codebook learn_codebook(std::span<const FrameSamples> frames, const mrf::PictorialModel& model,
                        const ingest::Grid& grid, std::uint32_t p, std::uint64_t seed,
                        const CodebookOptions& options = {});

/// Same algorithm over an explicit feature matrix (row-major, dim columns).
Codebook learn_codebook(std::span<const double> features, std::size_t dim, std::uint32_t p, std::uint64_t seed,
                        const CodebookOptions& options = {});

/// Index of the nearest centroid, lowest index on ties.
Symbol nearest(const Codebook& cb, std::span<const double> point);

/// One symbol per realization of the frame.
std::vector<Symbol> encode(const Codebook& cb, const mrf::PictorialModel& model, const mrf::SampleSet& samples,
                           const ingest::FrameDetections& frame, const ingest::Grid& grid);

void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// Sparse count tensor over a product of alphabets. Cells are addressed in
/// mixed radix with axis 0 most significant; only non-empty cells are
/// stored, sorted by cell index.
class JointHistogram {
 public:
  using Entry = std::pair<std::uint64_t, std::uint64_t>;  // (cell, count)

  JointHistogram() = default;
  JointHistogram(std::vector<std::uint32_t> dims, std::vector<Entry> entries);

  const std::vector<std::uint32_t>& dims() const noexcept { return dims_; }
  std::size_t axes() const noexcept { return dims_.size(); }
  std::uint64_t total() const noexcept { return total_; }
  /// Number of cells in the full product, as a double since it can exceed 2^64.
  double cells() const noexcept;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  std::uint64_t count(std::span<const std::uint32_t> index) const;
  std::uint64_t cell_index(std::span<const std::uint32_t> index) const;
  std::vector<std::uint32_t> unravel(std::uint64_t cell) const;

  /// Histogram over the listed axes (in the order given).
  JointHistogram marginal(std::span<const std::size_t> keep) const;

  /// Dense counts in cell order; throws StateSpaceTooLarge past 2^24 cells.
  std::vector<std::uint64_t> dense() const;

 private:
  std::vector<std::uint32_t> dims_;
  std::vector<Entry> entries_;
  std::uint64_t total_ = 0;
};

/// Joint histogram of aligned rows: realization j contributes one count to
/// cell (rows[0][j], rows[1][j], ...).
JointHistogram joint_histogram(std::span<const std::span<const Symbol>> rows, std::span<const std::uint32_t> dims);

}  // namespace soda::quant
