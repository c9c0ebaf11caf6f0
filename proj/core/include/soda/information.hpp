#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "soda/quantizer.hpp"
#include "soda/symbols.hpp"

namespace soda::info {

using quant::JointHistogram;

/// How the shrinkage intensity of each histogram is chosen.
struct LambdaPolicy {
  enum class Mode {
    ClosedForm,      // plug-in estimate of the MSE-optimal intensity
    CrossValidated,  // 10-fold held-out likelihood over {0, 0.05, ..., 1}
    Fixed,
  };
  Mode mode = Mode::ClosedForm;
  double fixed = 0.0;

  static LambdaPolicy closed_form() { return {}; }
  static LambdaPolicy cross_validated() { return {Mode::CrossValidated, 0.0}; }
  static LambdaPolicy fixed_value(double lambda) { return {Mode::Fixed, lambda}; }
  /// Maximum-likelihood plug-in (no shrinkage).
  static LambdaPolicy none() { return {Mode::Fixed, 0.0}; }
};

struct LambdaEstimate {
  double value = 0.0;
  bool zero_variance = false;  // the ML estimate already equals the target
};

/// Shrinkage intensity toward the uniform target:
///   clip[0,1]( (1 - sum theta^2) / ((n - 1) * sum (t - theta)^2) ).
/// Requires n >= 2. When theta equals the target exactly, returns 1 with
/// zero_variance set.
LambdaEstimate shrinkage_lambda(const JointHistogram& h);
/// Same for an explicit dense target over all cells.
LambdaEstimate shrinkage_lambda(const JointHistogram& h, std::span<const double> target);

/// 10-fold cross-validated intensity minimizing held-out negative
/// log-likelihood over the grid {0, 0.05, ..., 1}. Observations are dealt to
/// folds round-robin in cell order.
double cross_validated_lambda(const JointHistogram& h, std::size_t folds = 10);

double resolve_lambda(const JointHistogram& h, const LambdaPolicy& policy);

struct MultinomialEstimate {
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;
  std::vector<double> theta_ml;
  std::vector<double> target;
  double lambda = 0.0;
  std::vector<double> theta_shrunk;
};

/// theta_shrunk = lambda * target + (1 - lambda) * theta_ml, over dense cells.
MultinomialEstimate shrink(const JointHistogram& h, double lambda);
MultinomialEstimate shrink(const JointHistogram& h, double lambda, std::span<const double> target);

/// Plug-in entropy in nats, 0 ln 0 taken as 0.
double entropy(const MultinomialEstimate& est);
double entropy(std::span<const double> probs);

/// Entropy of the marginal over `axes` of the joint shrunk toward uniform
/// with intensity lambda. Works on the sparse form, so empty cells of huge
/// products cost nothing.
double shrunk_marginal_entropy(const JointHistogram& h, std::span<const std::size_t> axes, double lambda);

struct AxisGroups {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
  std::vector<std::size_t> c;  // conditioning axes; empty gives plain MI
};

struct CmiResult {
  double value = 0.0;
  double lambda = 0.0;
};

/// I(A; B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C), every term taken from
/// one shrunk copy of the joint, so the result is a true conditional MI of a
/// distribution and is non-negative up to rounding.
CmiResult cond_mutual_info(const JointHistogram& joint, const AxisGroups& groups,
                           const LambdaPolicy& policy = LambdaPolicy::closed_form());

/// Conditional MI of aligned symbol rows: I(x_rows; y_now | y_past).
/// This is one step of the directed-information sum.
CmiResult di_step(std::span<const std::span<const Symbol>> x_rows, std::span<const Symbol> y_now,
                  std::span<const std::span<const Symbol>> y_past, std::uint32_t px, std::uint32_t py,
                  const LambdaPolicy& policy = LambdaPolicy::closed_form());

struct DiResult {
  double value = 0.0;
  std::vector<double> per_step;
  int order_k = 1;
  std::vector<double> lambdas;  // intensity used at each step
};

/// Finite-order directed information X -> Y:
///   sum_m I(X_{m-k..m}; Y_m | Y_{m-k..m-1})
/// over the first min(M_x, M_y) frames; the first k steps use the shorter
/// past available. Histograms are built over the n index-paired realizations.
DiResult directed_information(const SymbolSequence& x, const SymbolSequence& y, int order_k,
                              const LambdaPolicy& policy = LambdaPolicy::closed_form());

/// Delayed reverse term sum_m I(Y_{m-k..m-1}; X_m | X_{m-k..m-1}).
DiResult delayed_reverse_di(const SymbolSequence& x, const SymbolSequence& y, int order_k,
                            const LambdaPolicy& policy = LambdaPolicy::closed_form());

/// Finite-order mutual information surrogate
///   sum_m [H(X_m | Xp) + H(Y_m | Yp) - H(X_m, Y_m | Xp, Yp)]
/// with k-frame pasts, from one shrunk joint per step. Arguments are put in a
/// canonical order first, so the result is bit-identical under swapping.
DiResult mutual_information(const SymbolSequence& x, const SymbolSequence& y, int order_k,
                            const LambdaPolicy& policy = LambdaPolicy::closed_form());

/// DI(X -> Y) + DI(Y -> X).
double symmetrized_di(const SymbolSequence& x, const SymbolSequence& y, int order_k,
                      const LambdaPolicy& policy = LambdaPolicy::closed_form());

/// Validates that two sequences can be compared and returns min(M_x, M_y).
std::size_t common_length(const SymbolSequence& x, const SymbolSequence& y);

}  // namespace soda::info
