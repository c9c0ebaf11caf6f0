#include "soda/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "soda/error.hpp"
#include "soda/parallel.hpp"
#include "soda/random.hpp"

namespace soda::loc {

namespace {

constexpr double kSigmaFloor = 1e-12;

std::vector<std::size_t> shift_grid(std::size_t frames, const SurfaceSpec& spec) {
  std::vector<std::size_t> taus;
  for (std::size_t t = 0; t + spec.window <= frames; t += spec.stride) taus.push_back(t);
  return taus;
}

// Every DI step the surfaces need. Entry (L, a, b) is
//   I(X_{a-L..a}; Y_b | Y_{b-L..b-1})
// with X frame indices taken modulo M_x, so circularly shifted copies of X
// read from the same table. Entries with b < L are never used.
class StepTables {
 public:
  StepTables(const SymbolSequence& x, const SymbolSequence& y, int order_k, const info::LambdaPolicy& policy,
             std::size_t threads)
      : mx_(x.frames()), my_(y.frames()), levels_(static_cast<std::size_t>(order_k) + 1) {
    values_.assign(levels_ * mx_ * my_, 0.0);
    parallel_for(mx_, static_cast<unsigned>(threads), [&](std::size_t a) {
      std::vector<std::span<const Symbol>> xr, yp;
      for (std::size_t level = 0; level < levels_; ++level) {
        xr.clear();
        for (std::size_t f = 0; f <= level; ++f) xr.push_back(x.row((a + mx_ * level + f - level) % mx_));
        for (std::size_t b = level; b < my_; ++b) {
          yp.clear();
          for (std::size_t f = b - level; f < b; ++f) yp.push_back(y.row(f));
          values_[(level * mx_ + a) * my_ + b] =
              info::di_step(xr, y.row(b), yp, x.alphabet(), y.alphabet(), policy).value;
        }
      }
    });
  }

  double at(std::size_t level, std::size_t a, std::size_t b) const noexcept {
    return values_[(level * mx_ + a) * my_ + b];
  }

  // Windowed DI with X rotated by `offset` frames, summed step by step in the
  // same order as directed_information.
  double window(std::size_t tx, std::size_t ty, std::size_t width, std::size_t offset) const noexcept {
    double acc = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
      const std::size_t level = std::min(s, levels_ - 1);
      acc += at(level, (tx + s + offset) % mx_, ty + s);
    }
    return acc;
  }

  Matrix surface(const std::vector<std::size_t>& tx, const std::vector<std::size_t>& ty, std::size_t width,
                 std::size_t offset) const {
    Matrix m(tx.size(), ty.size());
    for (std::size_t i = 0; i < tx.size(); ++i)
      for (std::size_t j = 0; j < ty.size(); ++j) m.at(i, j) = window(tx[i], ty[j], width, offset);
    return m;
  }

 private:
  std::size_t mx_;
  std::size_t my_;
  std::size_t levels_;
  std::vector<double> values_;
};

void check_pair(const SymbolSequence& x, const SymbolSequence& y, const SurfaceSpec& spec) {
  if (x.alphabet() != y.alphabet())
    throw Error(ErrorCode::IncompatibleAlphabets, "alphabets differ: " + std::to_string(x.alphabet()) + " vs " +
                                                      std::to_string(y.alphabet()));
  if (x.realizations() != y.realizations())
    throw Error(ErrorCode::IncompatibleAlphabets, "realization counts differ: " + std::to_string(x.realizations()) +
                                                      " vs " + std::to_string(y.realizations()));
  spec.validate(x.frames(), y.frames());
}

DiSurface surface_from(const StepTables& tables, const SymbolSequence& x, const SymbolSequence& y,
                       const SurfaceSpec& spec) {
  DiSurface s;
  s.tau_x = shift_grid(x.frames(), spec);
  s.tau_y = shift_grid(y.frames(), spec);
  s.di = tables.surface(s.tau_x, s.tau_y, spec.window, 0);
  return s;
}

NullModel null_from(const StepTables& tables, const SymbolSequence& x, const SymbolSequence& y,
                    const SurfaceSpec& spec, std::uint64_t seed, NullMode mode) {
  if (spec.null_reps < 30)
    throw Error(ErrorCode::InvalidArgument, "null model needs at least 30 replicates, got " +
                                                std::to_string(spec.null_reps));
  const auto tx = shift_grid(x.frames(), spec);
  const auto ty = shift_grid(y.frames(), spec);
  const std::size_t cells = tx.size() * ty.size();
  const CounterRng master(seed);

  NullModel null;
  null.mode = mode;
  std::vector<Matrix> reps;
  reps.reserve(spec.null_reps);
  for (std::size_t b = 0; b < spec.null_reps; ++b) {
    RngStream rng(master.split(b));
    const std::size_t offset = 1 + static_cast<std::size_t>(rng.below(x.frames() - 1));
    null.offsets.push_back(offset);
    reps.push_back(tables.surface(tx, ty, spec.window, offset));
    null.replicate_max.push_back(*std::max_element(reps.back().values.begin(), reps.back().values.end()));
  }

  // Observed p-values are only read at local maxima, so the pooled null is
  // the distribution of local-maximum values of the shifted surfaces.
  std::vector<double> pool;
  for (const auto& r : reps)
    for (std::size_t c : local_maxima(r)) pool.push_back(r.values[c]);
  // Flat surfaces have no strict maxima; fall back to every cell.
  if (pool.empty())
    for (const auto& r : reps) pool.insert(pool.end(), r.values.begin(), r.values.end());
  double sum = 0.0;
  for (double v : pool) sum += v;
  const double count = static_cast<double>(pool.size());
  null.mu = sum / count;
  double ss = 0.0;
  for (double v : pool) ss += (v - null.mu) * (v - null.mu);
  null.sigma = count > 1.0 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  null.degenerate = null.sigma < kSigmaFloor;

  if (mode == NullMode::PerCell) {
    null.mu_cell = Matrix(tx.size(), ty.size());
    null.sigma_cell = Matrix(tx.size(), ty.size());
    const double nb = static_cast<double>(reps.size());
    for (std::size_t c = 0; c < cells; ++c) {
      double m = 0.0;
      for (const auto& r : reps) m += r.values[c];
      m /= nb;
      double v = 0.0;
      for (const auto& r : reps) v += (r.values[c] - m) * (r.values[c] - m);
      null.mu_cell.values[c] = m;
      null.sigma_cell.values[c] = std::sqrt(v / (nb - 1.0));
    }
  }
  return null;
}

}  // namespace

void SurfaceSpec::validate(std::size_t mx, std::size_t my) const {
  if (order_k < 0 || order_k > 2)
    throw Error(ErrorCode::InvalidArgument, "order_k must lie in [0, 2], got " + std::to_string(order_k));
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be at least 1");
  if (window < static_cast<std::size_t>(order_k) + 2)
    throw Error(ErrorCode::WindowTooLarge, "window " + std::to_string(window) + " is shorter than order_k + 2");
  if (window > std::min(mx, my))
    throw Error(ErrorCode::WindowTooLarge, "window " + std::to_string(window) + " exceeds sequence length " +
                                               std::to_string(std::min(mx, my)));
}

DiSurface local_di_surface(const SymbolSequence& x, const SymbolSequence& y, const SurfaceSpec& spec,
                           const info::LambdaPolicy& policy, std::size_t threads) {
  check_pair(x, y, spec);
  const StepTables tables(x, y, spec.order_k, policy, threads);
  return surface_from(tables, x, y, spec);
}

NullModel null_calibrate(const SymbolSequence& x, const SymbolSequence& y, const SurfaceSpec& spec,
                         std::uint64_t seed, NullMode mode, const info::LambdaPolicy& policy, std::size_t threads) {
  check_pair(x, y, spec);
  const StepTables tables(x, y, spec.order_k, policy, threads);
  return null_from(tables, x, y, spec, seed, mode);
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

void p_values(DiSurface& surface, const NullModel& null) {
  surface.mu = null.mu;
  surface.sigma = null.sigma;
  surface.degenerate_null = null.degenerate;
  surface.pval = Matrix(surface.di.rows, surface.di.cols, 1.0);
  const bool per_cell = null.mode == NullMode::PerCell;
  if (per_cell && (null.mu_cell.rows != surface.di.rows || null.mu_cell.cols != surface.di.cols))
    throw Error(ErrorCode::DimensionMismatch, "per-cell null shape differs from surface");
  for (std::size_t c = 0; c < surface.di.values.size(); ++c) {
    const double mu = per_cell ? null.mu_cell.values[c] : null.mu;
    const double sigma = per_cell ? null.sigma_cell.values[c] : null.sigma;
    if (sigma < kSigmaFloor) continue;
    surface.pval.values[c] = normal_upper_tail((surface.di.values[c] - mu) / sigma);
  }
}

std::vector<std::size_t> fdr_select(std::span<const double> pvals, double q, FdrMethod method) {
  if (pvals.empty()) throw Error(ErrorCode::EmptyInput, "fdr_select needs at least one p-value");
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidArgument, "FDR level must lie in (0, 1)");
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  double c = 1.0;
  if (method == FdrMethod::BY) {
    c = 0.0;
    for (std::size_t j = 1; j <= m; ++j) c += 1.0 / static_cast<double>(j);
  }
  std::size_t reject = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    const double threshold = static_cast<double>(i) * q / (static_cast<double>(m) * c);
    if (pvals[order[i - 1]] <= threshold) reject = i;
  }
  std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(reject));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> local_maxima(const Matrix& m) {
  std::vector<std::size_t> out;
  if (m.values.size() == 1) return {0};
  const auto rows = static_cast<std::ptrdiff_t>(m.rows);
  const auto cols = static_cast<std::ptrdiff_t>(m.cols);
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      const double v = m.values[static_cast<std::size_t>(i * cols + j)];
      bool strict = true;
      for (std::ptrdiff_t ni = std::max<std::ptrdiff_t>(0, i - 1); strict && ni <= std::min(rows - 1, i + 1); ++ni)
        for (std::ptrdiff_t nj = std::max<std::ptrdiff_t>(0, j - 1); nj <= std::min(cols - 1, j + 1); ++nj)
          if ((ni != i || nj != j) && !(v > m.values[static_cast<std::size_t>(ni * cols + nj)])) {
            strict = false;
            break;
          }
      if (strict) out.push_back(static_cast<std::size_t>(i * cols + j));
    }
  }
  return out;
}

PeakList detect_peaks(const DiSurface& surface, std::size_t top_n, double q, FdrMethod method) {
  const Matrix& di = surface.di;
  if (surface.pval.rows != di.rows || surface.pval.cols != di.cols)
    throw Error(ErrorCode::DimensionMismatch, "surface has no p-values");
  PeakList out;
  if (di.values.empty()) return out;
  out.max_stat = *std::max_element(di.values.begin(), di.values.end());

  std::vector<Peak> cands;
  for (std::size_t c : local_maxima(di)) {
    const std::size_t i = c / di.cols;
    const std::size_t j = c % di.cols;
    cands.push_back({surface.tau_x[i], surface.tau_y[j], di.values[c], surface.pval.values[c], false});
  }
  out.candidates = cands.size();
  if (cands.empty()) return out;

  std::vector<double> p;
  for (const auto& c : cands) p.push_back(c.pval);
  for (std::size_t idx : fdr_select(p, q, method)) cands[idx].significant = true;

  std::stable_sort(cands.begin(), cands.end(), [](const Peak& a, const Peak& b) {
    if (a.pval != b.pval) return a.pval < b.pval;
    return a.di > b.di;
  });
  if (cands.size() > top_n) cands.resize(top_n);
  out.peaks = std::move(cands);
  return out;
}

double max_stat_pvalue(const PeakList& peaks) {
  if (peaks.peaks.empty() || peaks.candidates == 0) return 1.0;
  const double p_min = peaks.peaks.front().pval;
  if (p_min >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(peaks.candidates) * std::log1p(-p_min));
}

PairAnalysis analyze_pair(const SymbolSequence& x, const SymbolSequence& y, const AnalysisOptions& options,
                          std::uint64_t seed) {
  check_pair(x, y, options.spec);
  const StepTables tables(x, y, options.spec.order_k, options.policy, options.threads);
  PairAnalysis a;
  a.surface = surface_from(tables, x, y, options.spec);
  a.null = null_from(tables, x, y, options.spec, seed, options.null_mode);
  p_values(a.surface, a.null);
  a.peaks = detect_peaks(a.surface, options.top_n, options.q, options.method);
  a.max_stat_pval = max_stat_pvalue(a.peaks);
  return a;
}

std::vector<PairTest> interaction_tests(std::span<const SymbolSequence> corpus, const AnalysisOptions& options,
                                        std::uint64_t seed) {
  if (corpus.size() < 2) throw Error(ErrorCode::EmptyInput, "interaction tests need at least two sequences");
  std::vector<PairTest> tests;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t j = 0; j < corpus.size(); ++j)
      if (i != j) tests.push_back({i, j, 0.0, 1.0, false});
  const CounterRng master(seed);
  AnalysisOptions inner = options;
  inner.threads = 1;
  parallel_for(tests.size(), static_cast<unsigned>(options.threads), [&](std::size_t t) {
    auto& test = tests[t];
    const auto a = analyze_pair(corpus[test.source], corpus[test.target], inner, master.split(t).key());
    test.max_stat = a.peaks.max_stat;
    test.pval = a.max_stat_pval;
  });
  std::vector<double> p;
  for (const auto& t : tests) p.push_back(t.pval);
  for (std::size_t idx : fdr_select(p, options.q, options.method)) tests[idx].significant = true;
  return tests;
}

namespace {

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_surface_csv(std::ostream& out, const DiSurface& surface) {
  out << "tau_x,tau_y,di,pval\n";
  const bool has_p = surface.pval.rows == surface.di.rows && surface.pval.cols == surface.di.cols;
  for (std::size_t i = 0; i < surface.di.rows; ++i) {
    for (std::size_t j = 0; j < surface.di.cols; ++j) {
      out << surface.tau_x[i] << ',' << surface.tau_y[j] << ',' << format_real(surface.di.at(i, j)) << ','
          << (has_p ? format_real(surface.pval.at(i, j)) : std::string("")) << '\n';
    }
  }
}

void write_peaks_json(std::ostream& out, const PeakList& peaks) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : peaks.peaks) {
    arr.push_back({{"tau_x", p.tau_x}, {"tau_y", p.tau_y}, {"di", p.di}, {"pval", p.pval},
                   {"significant", p.significant}});
  }
  out << arr.dump(2) << '\n';
}

void write_bubble_svg(std::ostream& out, const DiSurface& surface, const PeakList& peaks, const PlotLegend& legend) {
  constexpr double W = 800, H = 600, left = 70, right = 30, top = 40, bottom = 60;
  const double span_x = surface.tau_x.empty() ? 1.0 : std::max<double>(1.0, static_cast<double>(surface.tau_x.back()));
  const double span_y = surface.tau_y.empty() ? 1.0 : std::max<double>(1.0, static_cast<double>(surface.tau_y.back()));
  auto px = [&](double t) { return left + (W - left - right) * t / span_x; };
  auto py = [&](double t) { return H - bottom - (H - top - bottom) * t / span_y; };
  auto num = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
  out << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double tx = span_x * k / 4.0;
    const double ty = span_y * k / 4.0;
    out << "<text x=\"" << num(px(tx)) << "\" y=\"" << H - bottom + 18
        << "\" font-size=\"12\" text-anchor=\"middle\">" << num(tx) << "</text>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << num(py(ty) + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">" << num(ty) << "</text>\n";
  }
  out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 15
      << "\" font-size=\"14\" text-anchor=\"middle\">tau_x</text>\n";
  out << "<text x=\"18\" y=\"" << (top + H - bottom) / 2 << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (top + H - bottom) / 2 << ")\">tau_y</text>\n";

  for (const auto& p : peaks.peaks) {
    const double r = p.pval > 0.0 ? std::clamp(0.2 / p.pval, 2.0, kMaxBubbleRadius) : kMaxBubbleRadius;
    out << "<circle cx=\"" << num(px(static_cast<double>(p.tau_x))) << "\" cy=\""
        << num(py(static_cast<double>(p.tau_y))) << "\" r=\"" << num(r) << "\" fill=\""
        << (p.significant ? "#d62728" : "none") << "\" fill-opacity=\"0.6\" stroke=\"#d62728\">"
        << "<title>tau_x=" << p.tau_x << " tau_y=" << p.tau_y << " di=" << p.di << " p=" << p.pval
        << "</title></circle>\n";
  }

  out << "<g font-size=\"12\">\n";
  out << "<rect x=\"" << W - right - 170 << "\" y=\"" << top << "\" width=\"165\" height=\"64\" fill=\"white\" stroke=\"gray\"/>\n";
  out << "<text x=\"" << W - right - 160 << "\" y=\"" << top + 18 << "\">T = " << legend.window << "</text>\n";
  out << "<text x=\"" << W - right - 160 << "\" y=\"" << top + 36 << "\">q = " << legend.q << "</text>\n";
  out << "<text x=\"" << W - right - 160 << "\" y=\"" << top + 54 << "\">seed = " << legend.seed << "</text>\n";
  out << "</g>\n</svg>\n";
}

}  // namespace soda::loc
