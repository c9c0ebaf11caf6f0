#include "soda/information.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "soda/error.hpp"
#include "estimation_detail.hpp"

namespace soda::info {

namespace {

double checked_target_sum(std::span<const double> target) {
  double sum = 0.0;
  for (double t : target) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidPmf, "shrinkage target has a negative entry");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidPmf, "shrinkage target does not sum to 1");
  return sum;
}

double clip_unit(double v) { return std::clamp(v, 0.0, 1.0); }

void require_samples(std::uint64_t n) {
  if (n < 2) throw Error(ErrorCode::InsufficientSamples, "shrinkage needs at least two observations");
}

}  // namespace

namespace detail {

LambdaEstimate closed_form_lambda(std::span<const std::uint64_t> counts, std::uint64_t n, double cells) {
  require_samples(n);
  const double nd = static_cast<double>(n);
  const double t = 1.0 / cells;
  double sum_sq = 0.0;
  double dev = 0.0;
  bool all_equal = true;
  for (std::uint64_t c : counts) {
    const double theta = static_cast<double>(c) / nd;
    sum_sq += theta * theta;
    dev += (t - theta) * (t - theta);
    all_equal = all_equal && c == counts.front();
  }
  const double empty = cells - static_cast<double>(counts.size());
  dev += empty * t * t;
  if (all_equal && empty == 0.0) return {1.0, true};
  if (!(dev > 0.0)) return {1.0, true};
  return {clip_unit((1.0 - sum_sq) / ((nd - 1.0) * dev)), false};
}

double cross_validated_lambda(std::span<const std::uint64_t> counts, std::uint64_t n, double cells,
                              std::size_t folds) {
  require_samples(n);
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "cross validation needs at least two folds");
  folds = std::min<std::size_t>(folds, n);
  // fold_counts[f][i]: observations of cell i dealt to fold f.
  std::vector<std::vector<std::uint64_t>> fold_counts(folds, std::vector<std::uint64_t>(counts.size(), 0));
  std::vector<std::uint64_t> fold_sizes(folds, 0);
  std::size_t next = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::uint64_t r = 0; r < counts[i]; ++r) {
      ++fold_counts[next][i];
      ++fold_sizes[next];
      next = (next + 1) % folds;
    }
  }

  double best_lambda = 0.0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= 20; ++g) {
    const double lambda = g / 20.0;
    double loss = 0.0;
    for (std::size_t f = 0; f < folds && std::isfinite(loss); ++f) {
      const double train_n = static_cast<double>(n - fold_sizes[f]);
      for (std::size_t i = 0; i < counts.size(); ++i) {
        const std::uint64_t held = fold_counts[f][i];
        if (held == 0) continue;
        const double train = static_cast<double>(counts[i] - held);
        const double q = lambda / cells + (1.0 - lambda) * train / train_n;
        if (!(q > 0.0)) {
          loss = std::numeric_limits<double>::infinity();
          break;
        }
        loss -= static_cast<double>(held) * std::log(q);
      }
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

double resolve_lambda(std::span<const std::uint64_t> counts, std::uint64_t n, double cells,
                      const LambdaPolicy& policy) {
  switch (policy.mode) {
    case LambdaPolicy::Mode::Fixed:
      if (!(policy.fixed >= 0.0 && policy.fixed <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "fixed shrinkage intensity must lie in [0, 1]");
      return policy.fixed;
    case LambdaPolicy::Mode::CrossValidated:
      if (n < 2) return 1.0;
      return cross_validated_lambda(counts, n, cells, 10);
    case LambdaPolicy::Mode::ClosedForm:
      break;
  }
  // A single observation carries no information about spread; fall back to
  // the target, which makes every information term vanish.
  if (n < 2) return 1.0;
  return closed_form_lambda(counts, n, cells).value;
}

double shrunk_entropy(std::span<const std::uint64_t> counts, std::uint64_t n, double cells, double lambda) {
  const double nd = static_cast<double>(n);
  const double u = lambda / cells;
  double h = 0.0;
  for (std::uint64_t c : counts) {
    const double q = u + (1.0 - lambda) * static_cast<double>(c) / nd;
    if (q > 0.0) h -= q * std::log(q);
  }
  if (lambda > 0.0) {
    // Every empty cell holds lambda / cells; together they hold
    // lambda * (1 - nnz / cells) of the mass.
    const double empty_mass = lambda * (1.0 - static_cast<double>(counts.size()) / cells);
    if (empty_mass > 0.0) h -= empty_mass * (std::log(lambda) - std::log(cells));
  }
  return h;
}

GroupedJoint::GroupedJoint(std::size_t groups, std::vector<double> group_cells)
    : groups_(groups), cells_(std::move(group_cells)) {
  if (groups_ == 0 || groups_ > kMaxGroups || cells_.size() != groups_)
    throw Error(ErrorCode::InvalidArgument, "grouped joint needs 1 to 4 groups");
}

void GroupedJoint::add(const Key& key, std::uint64_t weight) {
  if (weight == 0) return;
  full_counts_.reset();
  rows_.push_back({key, weight});
  n_ += weight;
}

double GroupedJoint::cells(unsigned mask) const {
  double c = 1.0;
  for (std::size_t g = 0; g < groups_; ++g)
    if (mask & (1u << g)) c *= cells_[g];
  return c;
}

std::vector<std::uint64_t> GroupedJoint::counts(unsigned mask) const {
  const unsigned full = (1u << groups_) - 1;
  if ((mask & full) == full && full_counts_) return *full_counts_;
  auto out = project(mask);
  if ((mask & full) == full) full_counts_ = out;
  return out;
}

// Counts come out in ascending key order on every path, so entropies summed
// over them do not depend on which path ran.
std::vector<std::uint64_t> GroupedJoint::project(unsigned mask) const {
  constexpr double kDenseCells = 1 << 20;
  const double total_cells = cells(mask);
  std::vector<std::uint64_t> out;

  if (total_cells <= 18446744073709551615.0 / 2) {
    // Mixed-radix packing with the first group most significant preserves
    // the lexicographic order of the keys.
    std::vector<std::uint64_t> radix(groups_, 0);
    for (std::size_t g = 0; g < groups_; ++g)
      radix[g] = (mask & (1u << g)) ? static_cast<std::uint64_t>(cells_[g]) : 1;
    auto pack = [&](const Key& key) {
      std::uint64_t v = 0;
      for (std::size_t g = 0; g < groups_; ++g)
        if (mask & (1u << g)) v = v * radix[g] + key[g];
      return v;
    };

    if (total_cells <= kDenseCells) {
      thread_local std::vector<std::uint64_t> dense;
      if (dense.size() < static_cast<std::size_t>(total_cells)) dense.assign(static_cast<std::size_t>(total_cells), 0);
      std::vector<std::uint64_t> touched;
      for (const auto& r : rows_) {
        const std::uint64_t v = pack(r.key);
        if (dense[v] == 0) touched.push_back(v);
        dense[v] += r.weight;
      }
      std::sort(touched.begin(), touched.end());
      out.reserve(touched.size());
      for (std::uint64_t v : touched) {
        out.push_back(dense[v]);
        dense[v] = 0;
      }
      return out;
    }

    std::vector<std::pair<std::uint64_t, std::uint64_t>> packed(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) packed[i] = {pack(rows_[i].key), rows_[i].weight};
    std::sort(packed.begin(), packed.end());
    for (std::size_t i = 0; i < packed.size();) {
      std::uint64_t t = 0;
      const std::uint64_t v = packed[i].first;
      while (i < packed.size() && packed[i].first == v) t += packed[i++].second;
      out.push_back(t);
    }
    return out;
  }

  std::vector<Row> proj(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    proj[i].weight = rows_[i].weight;
    for (std::size_t g = 0; g < groups_; ++g) proj[i].key[g] = (mask & (1u << g)) ? rows_[i].key[g] : 0;
  }
  std::sort(proj.begin(), proj.end(), [](const Row& a, const Row& b) { return a.key < b.key; });
  for (std::size_t i = 0; i < proj.size();) {
    std::size_t j = i;
    std::uint64_t total = 0;
    while (j < proj.size() && proj[j].key == proj[i].key) total += proj[j++].weight;
    out.push_back(total);
    i = j;
  }
  return out;
}

double GroupedJoint::entropy(unsigned mask, double lambda) const {
  if (mask == 0) return 0.0;
  const auto c = counts(mask);
  return shrunk_entropy(c, n_, cells(mask), lambda);
}

double GroupedJoint::lambda(const LambdaPolicy& policy) const {
  const unsigned full = (1u << groups_) - 1;
  const auto c = counts(full);
  return resolve_lambda(c, n_, cells(full), policy);
}

}  // namespace detail

LambdaEstimate shrinkage_lambda(const JointHistogram& h) {
  std::vector<std::uint64_t> counts;
  counts.reserve(h.entries().size());
  for (const auto& e : h.entries()) counts.push_back(e.second);
  return detail::closed_form_lambda(counts, h.total(), h.cells());
}

LambdaEstimate shrinkage_lambda(const JointHistogram& h, std::span<const double> target) {
  require_samples(h.total());
  const auto dense = h.dense();
  if (target.size() != dense.size())
    throw Error(ErrorCode::DimensionMismatch, "shrinkage target has " + std::to_string(target.size()) +
                                                  " cells, histogram has " + std::to_string(dense.size()));
  checked_target_sum(target);
  const double n = static_cast<double>(h.total());
  double sum_sq = 0.0;
  double dev = 0.0;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const double theta = static_cast<double>(dense[i]) / n;
    sum_sq += theta * theta;
    dev += (target[i] - theta) * (target[i] - theta);
  }
  if (dev == 0.0) return {1.0, true};
  return {clip_unit((1.0 - sum_sq) / ((n - 1.0) * dev)), false};
}

double cross_validated_lambda(const JointHistogram& h, std::size_t folds) {
  std::vector<std::uint64_t> counts;
  for (const auto& e : h.entries()) counts.push_back(e.second);
  return detail::cross_validated_lambda(counts, h.total(), h.cells(), folds);
}

double resolve_lambda(const JointHistogram& h, const LambdaPolicy& policy) {
  std::vector<std::uint64_t> counts;
  for (const auto& e : h.entries()) counts.push_back(e.second);
  return detail::resolve_lambda(counts, h.total(), h.cells(), policy);
}

MultinomialEstimate shrink(const JointHistogram& h, double lambda) {
  const auto cells = static_cast<std::size_t>(h.cells());
  if (h.cells() > static_cast<double>(std::uint64_t{1} << 24))
    throw Error(ErrorCode::StateSpaceTooLarge, "histogram too large for dense form");
  std::vector<double> target(cells, 1.0 / static_cast<double>(cells));
  return shrink(h, lambda, target);
}

MultinomialEstimate shrink(const JointHistogram& h, double lambda, std::span<const double> target) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  if (h.total() == 0) throw Error(ErrorCode::EmptyHistogram, "cannot shrink an empty histogram");
  MultinomialEstimate est;
  est.counts = h.dense();
  if (target.size() != est.counts.size())
    throw Error(ErrorCode::DimensionMismatch, "shrinkage target size differs from histogram");
  checked_target_sum(target);
  est.n = h.total();
  est.lambda = lambda;
  est.target.assign(target.begin(), target.end());
  est.theta_ml.resize(est.counts.size());
  est.theta_shrunk.resize(est.counts.size());
  const double n = static_cast<double>(est.n);
  for (std::size_t i = 0; i < est.counts.size(); ++i) {
    est.theta_ml[i] = static_cast<double>(est.counts[i]) / n;
    est.theta_shrunk[i] = lambda * target[i] + (1.0 - lambda) * est.theta_ml[i];
  }
  return est;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw Error(ErrorCode::InvalidPmf, "negative probability");
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double entropy(const MultinomialEstimate& est) { return entropy(est.theta_shrunk); }

double shrunk_marginal_entropy(const JointHistogram& h, std::span<const std::size_t> axes, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
  if (h.total() == 0) throw Error(ErrorCode::EmptyHistogram, "entropy of an empty histogram");
  if (axes.empty()) return 0.0;
  const auto m = h.marginal(axes);
  std::vector<std::uint64_t> counts;
  for (const auto& e : m.entries()) counts.push_back(e.second);
  return detail::shrunk_entropy(counts, h.total(), m.cells(), lambda);
}

CmiResult cond_mutual_info(const JointHistogram& joint, const AxisGroups& groups, const LambdaPolicy& policy) {
  if (joint.total() == 0) throw Error(ErrorCode::EmptyHistogram, "conditional MI of an empty histogram");
  if (groups.a.empty() || groups.b.empty())
    throw Error(ErrorCode::InvalidArgument, "conditional MI needs non-empty A and B axis groups");
  std::vector<int> owner(joint.axes(), -1);
  const std::array<const std::vector<std::size_t>*, 3> lists{&groups.a, &groups.b, &groups.c};
  for (int g = 0; g < 3; ++g) {
    for (std::size_t axis : *lists[g]) {
      if (axis >= joint.axes()) throw Error(ErrorCode::DimensionMismatch, "axis group names a missing axis");
      if (owner[axis] != -1) throw Error(ErrorCode::InvalidArgument, "axis listed in two groups");
      owner[axis] = g;
    }
  }
  // Axes left out of every group are summed over before shrinking.
  std::vector<double> group_cells(3, 1.0);
  for (int g = 0; g < 3; ++g)
    for (std::size_t axis : *lists[g]) group_cells[g] *= joint.dims()[axis];

  detail::GroupedJoint gj(3, group_cells);
  for (const auto& [cell, count] : joint.entries()) {
    const auto index = joint.unravel(cell);
    detail::GroupedJoint::Key key{};
    for (int g = 0; g < 3; ++g)
      for (std::size_t axis : *lists[g]) key[g] = key[g] * joint.dims()[axis] + index[axis];
    gj.add(key, count);
  }
  constexpr unsigned A = 1, B = 2, C = 4;
  CmiResult r;
  r.lambda = gj.lambda(policy);
  r.value = gj.entropy(A | C, r.lambda) + gj.entropy(B | C, r.lambda) - gj.entropy(A | B | C, r.lambda) -
            gj.entropy(C, r.lambda);
  return r;
}

namespace {

void check_rows(std::span<const std::span<const Symbol>> rows, std::size_t n, std::uint32_t p) {
  for (const auto& row : rows) {
    if (row.size() != n)
      throw Error(ErrorCode::LengthMismatch, "rows differ in realization count: " + std::to_string(row.size()) +
                                                 " vs " + std::to_string(n));
    for (Symbol s : row)
      if (s >= p)
        throw Error(ErrorCode::SymbolOutOfRange, "symbol " + std::to_string(s) + " outside alphabet of " +
                                                     std::to_string(p));
  }
}

std::uint64_t group_key(std::span<const std::span<const Symbol>> rows, std::size_t j, std::uint32_t p) {
  std::uint64_t k = 0;
  for (const auto& row : rows) k = k * p + row[j];
  return k;
}

double pow_cells(std::uint32_t p, std::size_t rows) { return std::pow(static_cast<double>(p), static_cast<double>(rows)); }

void check_order(int order_k) {
  if (order_k < 0 || order_k > 2)
    throw Error(ErrorCode::InvalidArgument, "order_k must lie in [0, 2], got " + std::to_string(order_k));
}

// Frames [m - past, m) of a sequence as row spans.
std::vector<std::span<const Symbol>> past_rows(const SymbolSequence& s, std::size_t m, std::size_t past) {
  std::vector<std::span<const Symbol>> rows;
  for (std::size_t f = m - past; f < m; ++f) rows.push_back(s.row(f));
  return rows;
}

}  // namespace

CmiResult di_step(std::span<const std::span<const Symbol>> x_rows, std::span<const Symbol> y_now,
                  std::span<const std::span<const Symbol>> y_past, std::uint32_t px, std::uint32_t py,
                  const LambdaPolicy& policy) {
  if (x_rows.empty()) throw Error(ErrorCode::InvalidArgument, "di_step needs at least one X row");
  const std::size_t n = y_now.size();
  if (n == 0) throw Error(ErrorCode::EmptyHistogram, "di_step over zero realizations");
  check_rows(x_rows, n, px);
  check_rows(y_past, n, py);
  check_rows(std::span<const std::span<const Symbol>>(&y_now, 1), n, py);

  detail::GroupedJoint gj(3, {pow_cells(px, x_rows.size()), static_cast<double>(py), pow_cells(py, y_past.size())});
  for (std::size_t j = 0; j < n; ++j)
    gj.add({group_key(x_rows, j, px), y_now[j], group_key(y_past, j, py), 0}, 1);
  constexpr unsigned A = 1, B = 2, C = 4;
  CmiResult r;
  r.lambda = gj.lambda(policy);
  r.value = gj.entropy(A | C, r.lambda) + gj.entropy(B | C, r.lambda) - gj.entropy(A | B | C, r.lambda) -
            gj.entropy(C, r.lambda);
  return r;
}

std::size_t common_length(const SymbolSequence& x, const SymbolSequence& y) {
  if (x.realizations() != y.realizations())
    throw Error(ErrorCode::LengthMismatch, "sequences hold " + std::to_string(x.realizations()) + " and " +
                                               std::to_string(y.realizations()) + " realizations");
  const std::size_t m = std::min(x.frames(), y.frames());
  if (m == 0) throw Error(ErrorCode::EmptySequence, "directed information of an empty sequence");
  if (x.realizations() == 0) throw Error(ErrorCode::EmptyHistogram, "sequences hold no realizations");
  return m;
}

DiResult directed_information(const SymbolSequence& x, const SymbolSequence& y, int order_k,
                              const LambdaPolicy& policy) {
  check_order(order_k);
  const std::size_t frames = common_length(x, y);
  DiResult r;
  r.order_k = order_k;
  for (std::size_t m = 0; m < frames; ++m) {
    const std::size_t past = std::min<std::size_t>(static_cast<std::size_t>(order_k), m);
    auto xr = past_rows(x, m, past);
    xr.push_back(x.row(m));
    const auto yp = past_rows(y, m, past);
    const auto step = di_step(xr, y.row(m), yp, x.alphabet(), y.alphabet(), policy);
    r.per_step.push_back(step.value);
    r.lambdas.push_back(step.lambda);
    r.value += step.value;
  }
  return r;
}

DiResult delayed_reverse_di(const SymbolSequence& x, const SymbolSequence& y, int order_k,
                            const LambdaPolicy& policy) {
  check_order(order_k);
  const std::size_t frames = common_length(x, y);
  DiResult r;
  r.order_k = order_k;
  for (std::size_t m = 0; m < frames; ++m) {
    const std::size_t past = std::min<std::size_t>(static_cast<std::size_t>(order_k), m);
    if (past == 0) {
      r.per_step.push_back(0.0);
      r.lambdas.push_back(0.0);
      continue;
    }
    const auto yp = past_rows(y, m, past);
    const auto xp = past_rows(x, m, past);
    const auto step = di_step(yp, x.row(m), xp, y.alphabet(), x.alphabet(), policy);
    r.per_step.push_back(step.value);
    r.lambdas.push_back(step.lambda);
    r.value += step.value;
  }
  return r;
}

namespace {

bool canonically_before(const SymbolSequence& a, const SymbolSequence& b) {
  if (a.alphabet() != b.alphabet()) return a.alphabet() < b.alphabet();
  if (a.frames() != b.frames()) return a.frames() < b.frames();
  return a.data() <= b.data();
}

}  // namespace

DiResult mutual_information(const SymbolSequence& x_in, const SymbolSequence& y_in, int order_k,
                            const LambdaPolicy& policy) {
  check_order(order_k);
  const bool keep = canonically_before(x_in, y_in);
  const SymbolSequence& x = keep ? x_in : y_in;
  const SymbolSequence& y = keep ? y_in : x_in;
  const std::size_t frames = common_length(x, y);
  const std::size_t n = x.realizations();
  DiResult r;
  r.order_k = order_k;
  constexpr unsigned XP = 1, XM = 2, YP = 4, YM = 8;
  for (std::size_t m = 0; m < frames; ++m) {
    const std::size_t past = std::min<std::size_t>(static_cast<std::size_t>(order_k), m);
    const auto xp = past_rows(x, m, past);
    const auto yp = past_rows(y, m, past);
    detail::GroupedJoint gj(4, {pow_cells(x.alphabet(), past), static_cast<double>(x.alphabet()),
                                pow_cells(y.alphabet(), past), static_cast<double>(y.alphabet())});
    const auto xm = x.row(m);
    const auto ym = y.row(m);
    for (std::size_t j = 0; j < n; ++j) gj.add({group_key(xp, j, x.alphabet()), xm[j], group_key(yp, j, y.alphabet()), ym[j]}, 1);
    const double lambda = gj.lambda(policy);
    const double v = gj.entropy(XP | XM, lambda) - gj.entropy(XP, lambda) + gj.entropy(YP | YM, lambda) -
                     gj.entropy(YP, lambda) - gj.entropy(XP | XM | YP | YM, lambda) + gj.entropy(XP | YP, lambda);
    r.per_step.push_back(v);
    r.lambdas.push_back(lambda);
    r.value += v;
  }
  return r;
}

double symmetrized_di(const SymbolSequence& x, const SymbolSequence& y, int order_k, const LambdaPolicy& policy) {
  return directed_information(x, y, order_k, policy).value + directed_information(y, x, order_k, policy).value;
}

}  // namespace soda::info
