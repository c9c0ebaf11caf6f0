#pragma once

// Internal building blocks shared by the estimators and the localizer.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "soda/information.hpp"

namespace soda::info::detail {

LambdaEstimate closed_form_lambda(std::span<const std::uint64_t> counts, std::uint64_t n, double cells);
double cross_validated_lambda(std::span<const std::uint64_t> counts, std::uint64_t n, double cells,
                              std::size_t folds);
double resolve_lambda(std::span<const std::uint64_t> counts, std::uint64_t n, double cells,
                      const LambdaPolicy& policy);

/// Entropy of a histogram shrunk toward uniform over `cells` cells, given
/// only its non-empty counts.
double shrunk_entropy(std::span<const std::uint64_t> counts, std::uint64_t n, double cells, double lambda);

/// Weighted observations of up to four grouped keys. Each group is a block of
/// axes collapsed to one mixed-radix key; cells per group may exceed 2^64 as
/// a double. Marginals over any subset of groups are taken from the joint
/// shrunk once toward uniform.
class GroupedJoint {
 public:
  static constexpr std::size_t kMaxGroups = 4;
  using Key = std::array<std::uint64_t, kMaxGroups>;

  GroupedJoint(std::size_t groups, std::vector<double> group_cells);

  void add(const Key& key, std::uint64_t weight);
  std::uint64_t total() const noexcept { return n_; }

  double cells(unsigned mask) const;
  /// Non-empty counts of the marginal over the groups in `mask`.
  std::vector<std::uint64_t> counts(unsigned mask) const;
  double entropy(unsigned mask, double lambda) const;
  double lambda(const LambdaPolicy& policy) const;

 private:
  std::vector<std::uint64_t> project(unsigned mask) const;

  struct Row {
    Key key{};
    std::uint64_t weight = 0;
  };
  std::size_t groups_;
  std::vector<double> cells_;
  std::vector<Row> rows_;
  std::uint64_t n_ = 0;
  mutable std::optional<std::vector<std::uint64_t>> full_counts_;
};

}  // namespace soda::info::detail
