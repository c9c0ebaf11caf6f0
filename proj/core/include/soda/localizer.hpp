#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "soda/information.hpp"
#include "soda/symbols.hpp"

namespace soda::loc {

struct SurfaceSpec {
  std::size_t window = 7;
  std::size_t stride = 1;
  int order_k = 1;
  std::size_t null_reps = 200;

  /// Throws WindowTooLarge unless order_k + 2 <= window <= min(mx, my).
  void validate(std::size_t mx, std::size_t my) const;
};

/// Row-major real matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& at(std::size_t i, std::size_t j) noexcept { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const noexcept { return values[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class NullMode {
  Pooled,   // one mean/sd over the local maxima of every shifted surface
  PerCell,  // mean/sd of each cell across the shifted surfaces
};

struct NullModel {
  NullMode mode = NullMode::Pooled;
  double mu = 0.0;
  double sigma = 0.0;
  bool degenerate = false;  // sigma below 1e-12; p-values are then 1
  Matrix mu_cell;           // PerCell only
  Matrix sigma_cell;        // PerCell only
  std::vector<std::size_t> offsets;     // circular shift of X per replicate
  std::vector<double> replicate_max;    // max cell of each shifted surface
};

/// Windowed DI over time shifts. Row i is tau_x = tau_x[i], column j is
/// tau_y = tau_y[j]; both run over [0, M - T] in steps of stride.
struct DiSurface {
  std::vector<std::size_t> tau_x;
  std::vector<std::size_t> tau_y;
  Matrix di;
  Matrix pval;  // empty until p_values runs
  double mu = 0.0;
  double sigma = 0.0;
  bool degenerate_null = false;
};

/// di[i][j] = DI(X[tau_x .. tau_x + T) -> Y[tau_y .. tau_y + T)) at order k,
/// bit-identical to calling directed_information on the slices.
DiSurface local_di_surface(const SymbolSequence& x, const SymbolSequence& y, const SurfaceSpec& spec,
                           const info::LambdaPolicy& policy = info::LambdaPolicy::closed_form(),
                           std::size_t threads = 1);

/// Circular-shift null. Replicate b rotates X's frames by an offset in
/// [1, M_x - 1] drawn from sub-stream b of `seed` and recomputes the whole
/// surface. Requires null_reps >= 30.
NullModel null_calibrate(const SymbolSequence& x, const SymbolSequence& y, const SurfaceSpec& spec,
                         std::uint64_t seed, NullMode mode = NullMode::Pooled,
                         const info::LambdaPolicy& policy = info::LambdaPolicy::closed_form(),
                         std::size_t threads = 1);

/// Upper-tail normal probability 1 - Phi(z), computed as erfc(z / sqrt 2) / 2
/// with the C library erfc (relative error near machine precision).
double normal_upper_tail(double z);

/// Fills surface.pval from the null model and records mu/sigma on it.
void p_values(DiSurface& surface, const NullModel& null);

enum class FdrMethod { BH, BY };

/// Step-up selection: with p sorted ascending, reject the first i where i is
/// the largest index such that p_(i) <= i q / (m c(m)); c(m) = 1 for BH and
/// sum_{j<=m} 1/j for BY. Returns rejected indices into `pvals`, ascending.
std::vector<std::size_t> fdr_select(std::span<const double> pvals, double q, FdrMethod method = FdrMethod::BY);

struct Peak {
  std::size_t tau_x = 0;
  std::size_t tau_y = 0;
  double di = 0.0;
  double pval = 1.0;
  bool significant = false;
};

struct PeakList {
  std::vector<Peak> peaks;  // ascending pval
  double max_stat = 0.0;    // largest di over the surface
  std::size_t candidates = 0;
};

/// Flat indices of the strict local maxima of m over the 8-neighborhood,
/// in row-major order. A 1x1 matrix yields its single cell.
std::vector<std::size_t> local_maxima(const Matrix& m);

/// Strict local maxima of di over the 8-neighborhood (edge cells compare the
/// neighbors they have; plateaus yield nothing). Significance comes from
/// fdr_select over every candidate, then the top_n smallest p-values are kept.
PeakList detect_peaks(const DiSurface& surface, std::size_t top_n = 10, double q = 0.1,
                      FdrMethod method = FdrMethod::BY);

/// Everything the surface command needs, sharing one set of step tables.
struct PairAnalysis {
  DiSurface surface;
  NullModel null;
  PeakList peaks;
  double max_stat_pval = 1.0;  // see max_stat_pvalue
};

/// P(some candidate peak reaches the smallest observed p-value) when the
/// candidates are independent under the null: 1 - (1 - p_min)^candidates.
/// Shifting X only relocates a lagged coupling on the surface, so maxima of
/// shifted surfaces cannot serve as the null of the surface maximum.
double max_stat_pvalue(const PeakList& peaks);

struct AnalysisOptions {
  SurfaceSpec spec;
  NullMode null_mode = NullMode::Pooled;
  info::LambdaPolicy policy = info::LambdaPolicy::closed_form();
  std::size_t top_n = 10;
  double q = 0.1;
  FdrMethod method = FdrMethod::BY;
  std::size_t threads = 1;
};

PairAnalysis analyze_pair(const SymbolSequence& x, const SymbolSequence& y, const AnalysisOptions& options,
                          std::uint64_t seed);

/// Corpus-level interaction test: one max-statistic p-value per ordered pair
/// (i, j), i != j, with FDR selection across all pairs.
struct PairTest {
  std::size_t source = 0;
  std::size_t target = 0;
  double max_stat = 0.0;
  double pval = 1.0;
  bool significant = false;
};

std::vector<PairTest> interaction_tests(std::span<const SymbolSequence> corpus, const AnalysisOptions& options,
                                        std::uint64_t seed);

void write_surface_csv(std::ostream& out, const DiSurface& surface);
void write_peaks_json(std::ostream& out, const PeakList& peaks);

struct PlotLegend {
  std::size_t window = 7;
  double q = 0.1;
  std::uint64_t seed = 0;
};

inline constexpr double kMaxBubbleRadius = 40.0;

/// 800x600 SVG of the peaks over the (tau_x, tau_y) plane. Bubble radius is
/// min(40, 0.2 / pval) pixels; significant peaks are filled.
void write_bubble_svg(std::ostream& out, const DiSurface& surface, const PeakList& peaks, const PlotLegend& legend);

}  // namespace soda::loc
