#include "soda/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "soda/error.hpp"
#include "soda/random.hpp"

namespace soda::quant {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::uint64_t checked_cells(std::span<const std::uint32_t> dims) {
  std::uint64_t cells = 1;
  for (std::uint32_t d : dims) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "histogram axis of size 0");
    if (cells > (std::uint64_t{1} << 62) / d)
      throw Error(ErrorCode::StateSpaceTooLarge, "histogram cell count exceeds 2^62");
    cells *= d;
  }
  return cells;
}

}  // namespace

std::vector<double> realization_features(const mrf::PictorialModel& model, const mrf::SampleSet& samples,
                                         const ingest::FrameDetections& frame, const ingest::Grid& grid) {
  const mrf::FrameField field(model, frame);
  const std::size_t vars = field.variables();
  if (samples.variables() != vars)
    throw Error(ErrorCode::DimensionMismatch, "frame " + std::to_string(frame.frame_index) + " has " +
                                                  std::to_string(vars) + " model variables, samples have " +
                                                  std::to_string(samples.variables()));
  const double w = static_cast<double>(grid.width);
  const double h = static_cast<double>(grid.height);
  std::vector<double> out(samples.size() * vars * 2);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto a = samples.sample(j);
    double* dst = out.data() + j * vars * 2;
    for (std::size_t v = 0; v < vars; ++v) {
      if (a[v] >= field.candidates(v))
        throw Error(ErrorCode::InvalidAssignment, "sample " + std::to_string(j) + " of frame " +
                                                      std::to_string(frame.frame_index) +
                                                      " indexes a missing candidate");
      dst[2 * v] = field.candidate(v, a[v]).x / w;
      dst[2 * v + 1] = field.candidate(v, a[v]).y / h;
    }
  }
  // Center on the frame's posterior mean: a symbol then says which
  // candidates realization j chose, not where the people stand.
  if (samples.size() > 0) {
    const std::size_t dim = vars * 2;
    std::vector<double> mean(dim, 0.0);
    for (std::size_t j = 0; j < samples.size(); ++j)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += out[j * dim + d];
    for (double& m : mean) m /= static_cast<double>(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j)
      for (std::size_t d = 0; d < dim; ++d) out[j * dim + d] -= mean[d];
  }
  return out;
}

namespace {

// Indices of the training points: all of them, or an evenly strided subset
// with a seeded start.
std::vector<std::size_t> training_pool(std::size_t total, const CodebookOptions& options, RngStream& rng) {
  std::vector<std::size_t> pool;
  if (options.max_training_points == 0 || total <= options.max_training_points) {
    pool.resize(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    return pool;
  }
  const double step = static_cast<double>(total) / static_cast<double>(options.max_training_points);
  const double start = rng.uniform() * step;
  for (std::size_t i = 0; i < options.max_training_points; ++i)
    pool.push_back(std::min(total - 1, static_cast<std::size_t>(start + static_cast<double>(i) * step)));
  return pool;
}

void check_codebook_args(std::size_t dim, std::uint32_t p, std::size_t total) {
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "feature dimension is zero");
  if (p < 1 || p > kMaxAlphabet) throw Error(ErrorCode::InvalidArgument, "p must be in [1, 4096]");
  if (total < p)
    throw Error(ErrorCode::InsufficientSamples,
                std::to_string(total) + " samples cannot support " + std::to_string(p) + " centroids");
}

// k-means over the rows of `points` (row-major, dim columns).
Codebook kmeans(const std::vector<double>& points, std::size_t dim, std::uint32_t p, RngStream& rng,
                const CodebookOptions& options) {
  const std::size_t count = points.size() / dim;
  auto point = [&](std::size_t i) { return std::span<const double>(points.data() + i * dim, dim); };

  Codebook cb;
  cb.p = p;
  cb.feature_dim = dim;
  cb.centroids.assign(static_cast<std::size_t>(p) * dim, 0.0);

  if (p == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = point(i);
      for (std::size_t d = 0; d < dim; ++d) cb.centroids[d] += x[d];
    }
    for (double& c : cb.centroids) c /= static_cast<double>(count);
    return cb;
  }

  // Farthest-point initialization.
  std::vector<double> min_dist(count, std::numeric_limits<double>::infinity());
  std::size_t next = static_cast<std::size_t>(rng.below(count));
  for (std::uint32_t k = 0; k < p; ++k) {
    const auto src = point(next);
    std::copy(src.begin(), src.end(), cb.centroids.begin() + static_cast<std::ptrdiff_t>(k * dim));
    if (k + 1 == p) break;
    double far = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(point(i), cb.centroid(k)));
      if (min_dist[i] > far) {
        far = min_dist[i];
        next = i;
      }
    }
    if (far <= 0.0) {
      throw Error(ErrorCode::DegenerateData,
                  k == 0 ? std::string("all samples are identical; cannot place ") + std::to_string(p) + " centroids"
                         : "only " + std::to_string(k + 1) + " distinct samples for " + std::to_string(p) +
                               " centroids");
    }
  }

  std::vector<std::uint32_t> assign(count, 0);
  std::vector<double> sums(static_cast<std::size_t>(p) * dim);
  std::vector<std::size_t> sizes(p);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = point(i);
      std::uint32_t best = 0;
      double best_d = squared_distance(x, cb.centroid(0));
      for (std::uint32_t k = 1; k < p; ++k) {
        const double d = squared_distance(x, cb.centroid(k));
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      assign[i] = best;
      inertia += best_d;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = point(i);
      double* s = sums.data() + assign[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
      ++sizes[assign[i]];
    }
    for (std::uint32_t k = 0; k < p; ++k) {
      if (sizes[k] == 0) continue;  // an empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d)
        cb.centroids[k * dim + d] = sums[k * dim + d] / static_cast<double>(sizes[k]);
    }
    const bool converged =
        std::isfinite(previous) && std::abs(previous - inertia) <= options.relative_tolerance * std::max(inertia, 1e-300);
    previous = inertia;
    if (converged) break;
  }
  return cb;
}

}  // namespace

Codebook learn_codebook(std::span<const double> features, std::size_t dim, std::uint32_t p, std::uint64_t seed,
                        const CodebookOptions& options) {
  if (dim != 0 && features.size() % dim != 0)
    throw Error(ErrorCode::DimensionMismatch, "feature buffer is not a multiple of the dimension");
  const std::size_t total = dim == 0 ? 0 : features.size() / dim;
  check_codebook_args(dim, p, total);
  RngStream rng(CounterRng(seed).split(0xC0DEB00C));
  const auto pool = training_pool(total, options, rng);
  std::vector<double> points;
  points.reserve(pool.size() * dim);
  for (std::size_t i : pool) points.insert(points.end(), features.begin() + i * dim, features.begin() + (i + 1) * dim);
  return kmeans(points, dim, p, rng, options);
}

Codebook learn_codebook(std::span<const FrameSamples> frames, const mrf::PictorialModel& model,
                        const ingest::Grid& grid, std::uint32_t p, std::uint64_t seed,
                        const CodebookOptions& options) {
  if (frames.empty()) throw Error(ErrorCode::InsufficientSamples, "no samples to learn a codebook from");
  const std::size_t dim = model.variables().size() * 2;
  std::size_t total = 0;
  for (const auto& fs : frames) {
    if (fs.samples->variables() * 2 != dim)
      throw Error(ErrorCode::DimensionMismatch, "frames disagree on feature dimension");
    total += fs.samples->size();
  }
  check_codebook_args(dim, p, total);
  RngStream rng(CounterRng(seed).split(0xC0DEB00C));
  const auto pool = training_pool(total, options, rng);

  // Walk the pool (ascending) frame by frame, extracting only pooled rows.
  std::vector<double> points;
  points.reserve(pool.size() * dim);
  std::size_t base = 0, cursor = 0;
  for (const auto& fs : frames) {
    const std::size_t n = fs.samples->size();
    if (cursor < pool.size() && pool[cursor] < base + n) {
      const auto f = realization_features(model, *fs.samples, *fs.frame, fs.grid ? *fs.grid : grid);
      while (cursor < pool.size() && pool[cursor] < base + n) {
        const std::size_t r = pool[cursor++] - base;
        points.insert(points.end(), f.begin() + r * dim, f.begin() + (r + 1) * dim);
      }
    }
    base += n;
  }
  return kmeans(points, dim, p, rng, options);
}

Symbol nearest(const Codebook& cb, std::span<const double> point) {
  if (point.size() != cb.feature_dim)
    throw Error(ErrorCode::DimensionMismatch, "point has dimension " + std::to_string(point.size()) +
                                                  ", codebook expects " + std::to_string(cb.feature_dim));
  Symbol best = 0;
  double best_d = squared_distance(point, cb.centroid(0));
  for (std::uint32_t k = 1; k < cb.p; ++k) {
    const double d = squared_distance(point, cb.centroid(k));
    if (d < best_d) {
      best_d = d;
      best = static_cast<Symbol>(k);
    }
  }
  return best;
}

std::vector<Symbol> encode(const Codebook& cb, const mrf::PictorialModel& model, const mrf::SampleSet& samples,
                           const ingest::FrameDetections& frame, const ingest::Grid& grid) {
  if (samples.variables() * 2 != cb.feature_dim)
    throw Error(ErrorCode::DimensionMismatch, "samples have " + std::to_string(samples.variables() * 2) +
                                                  " features, codebook expects " + std::to_string(cb.feature_dim));
  const auto features = realization_features(model, samples, frame, grid);
  std::vector<Symbol> row(samples.size());
  const std::span<const double> all(features);
  for (std::size_t j = 0; j < samples.size(); ++j) row[j] = nearest(cb, all.subspan(j * cb.feature_dim, cb.feature_dim));
  return row;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["p"] = cb.p;
  doc["feature_dim"] = cb.feature_dim;
  auto rows = nlohmann::json::array();
  for (std::uint32_t k = 0; k < cb.p; ++k) {
    const auto c = cb.centroid(k);
    rows.push_back(std::vector<double>(c.begin(), c.end()));
  }
  doc["centroids"] = std::move(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << doc.dump() << '\n';
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    Codebook cb;
    cb.p = doc.at("p").get<std::uint32_t>();
    cb.feature_dim = doc.at("feature_dim").get<std::size_t>();
    const auto& rows = doc.at("centroids");
    if (!rows.is_array() || rows.size() != cb.p)
      throw Error(ErrorCode::MalformedRecord, path.string() + ": expected " + std::to_string(cb.p) + " centroids");
    for (const auto& r : rows) {
      const auto v = r.get<std::vector<double>>();
      if (v.size() != cb.feature_dim)
        throw Error(ErrorCode::MalformedRecord, path.string() + ": centroid has wrong dimension");
      cb.centroids.insert(cb.centroids.end(), v.begin(), v.end());
    }
    return cb;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
}

JointHistogram::JointHistogram(std::vector<std::uint32_t> dims, std::vector<Entry> entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
  const std::uint64_t cells = checked_cells(dims_);
  std::sort(entries_.begin(), entries_.end());
  std::vector<Entry> merged;
  merged.reserve(entries_.size());
  for (const auto& [cell, count] : entries_) {
    if (cell >= cells) throw Error(ErrorCode::SymbolOutOfRange, "cell index outside histogram");
    if (count == 0) continue;
    if (!merged.empty() && merged.back().first == cell)
      merged.back().second += count;
    else
      merged.emplace_back(cell, count);
    total_ += count;
  }
  entries_ = std::move(merged);
}

double JointHistogram::cells() const noexcept {
  double c = 1.0;
  for (std::uint32_t d : dims_) c *= static_cast<double>(d);
  return c;
}

std::uint64_t JointHistogram::cell_index(std::span<const std::uint32_t> index) const {
  if (index.size() != dims_.size()) throw Error(ErrorCode::DimensionMismatch, "index rank differs from histogram");
  std::uint64_t cell = 0;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    if (index[a] >= dims_[a]) throw Error(ErrorCode::SymbolOutOfRange, "index outside histogram axis");
    cell = cell * dims_[a] + index[a];
  }
  return cell;
}

std::vector<std::uint32_t> JointHistogram::unravel(std::uint64_t cell) const {
  std::vector<std::uint32_t> index(dims_.size());
  for (std::size_t a = dims_.size(); a-- > 0;) {
    index[a] = static_cast<std::uint32_t>(cell % dims_[a]);
    cell /= dims_[a];
  }
  return index;
}

std::uint64_t JointHistogram::count(std::span<const std::uint32_t> index) const {
  const std::uint64_t cell = cell_index(index);
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{cell, 0});
  return it != entries_.end() && it->first == cell ? it->second : 0;
}

JointHistogram JointHistogram::marginal(std::span<const std::size_t> keep) const {
  std::vector<std::uint32_t> dims;
  for (std::size_t a : keep) {
    if (a >= dims_.size()) throw Error(ErrorCode::DimensionMismatch, "marginal axis out of range");
    dims.push_back(dims_[a]);
  }
  std::vector<Entry> out;
  out.reserve(entries_.size());
  for (const auto& [cell, count] : entries_) {
    const auto index = unravel(cell);
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) key = key * dims[i] + index[keep[i]];
    out.emplace_back(key, count);
  }
  return JointHistogram(std::move(dims), std::move(out));
}

std::vector<std::uint64_t> JointHistogram::dense() const {
  const std::uint64_t cells = checked_cells(dims_);
  if (cells > (std::uint64_t{1} << 24)) throw Error(ErrorCode::StateSpaceTooLarge, "histogram too large for dense form");
  std::vector<std::uint64_t> out(cells, 0);
  for (const auto& [cell, count] : entries_) out[cell] = count;
  return out;
}

JointHistogram joint_histogram(std::span<const std::span<const Symbol>> rows, std::span<const std::uint32_t> dims) {
  if (rows.size() != dims.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(rows.size()) + " rows for " + std::to_string(dims.size()) +
                                               " dimensions");
  if (rows.empty()) throw Error(ErrorCode::EmptyHistogram, "joint histogram needs at least one row");
  checked_cells(dims);
  const std::size_t n = rows[0].size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n)
      throw Error(ErrorCode::LengthMismatch, "row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                                                 " realizations, expected " + std::to_string(n));
  }
  std::vector<std::uint64_t> keys(n, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint32_t d = dims[r];
    for (std::size_t j = 0; j < n; ++j) {
      if (rows[r][j] >= d)
        throw Error(ErrorCode::SymbolOutOfRange, "row " + std::to_string(r) + " symbol " + std::to_string(rows[r][j]) +
                                                     " is outside [0, " + std::to_string(d) + ")");
      keys[j] = keys[j] * d + rows[r][j];
    }
  }
  std::sort(keys.begin(), keys.end());
  std::vector<JointHistogram::Entry> entries;
  for (std::size_t j = 0; j < n;) {
    std::size_t k = j;
    while (k < n && keys[k] == keys[j]) ++k;
    entries.emplace_back(keys[j], k - j);
    j = k;
  }
  return JointHistogram(std::vector<std::uint32_t>(dims.begin(), dims.end()), std::move(entries));
}

}  // namespace soda::quant
