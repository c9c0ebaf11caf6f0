#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "soda/information.hpp"
#include "soda/localizer.hpp"
#include "soda/symbols.hpp"

namespace soda::cls {

using loc::Matrix;

/// forward(i, j) = DI(i -> j) for i != j; sym = forward + forward^T. The
/// diagonal is left at zero and never used as a neighbor.
struct DiMatrix {
  std::vector<std::string> ids;
  Matrix forward;
  Matrix sym;
};

/// Every ordered pair, computed concurrently into disjoint cells. Results do
/// not depend on `threads`.
DiMatrix pairwise_matrix(std::span<const SymbolSequence> corpus, int order_k,
                         const info::LambdaPolicy& policy = info::LambdaPolicy::closed_form(),
                         std::size_t threads = 1);

struct Split {
  std::vector<std::size_t> train;  // ascending corpus indices
  std::vector<std::size_t> test;
};

/// Stratified seeded split. Each class contributes round-half-up of its share
/// of round(ratio * N) by largest remainder, clamped to [1, count - 1].
/// Throws ClassTooSmall when a class has fewer than two members.
Split split(std::span<const std::string> labels, double ratio, std::uint64_t seed);

struct Prediction {
  std::size_t index = 0;  // corpus index of the test sequence
  std::string predicted;
  /// Largest similarity to any training member of each class, classes in
  /// ascending label order.
  std::vector<double> class_scores;
};

/// Neighbors are the k training sequences with the largest symmetrized DI
/// (lower index first on equal similarity). Majority vote; ties go to the
/// larger summed similarity, then the lexicographically smallest label.
std::vector<Prediction> nn_classify(const DiMatrix& matrix, std::span<const std::size_t> train,
                                    std::span<const std::string> train_labels, std::span<const std::size_t> test,
                                    std::size_t k_neighbors = 1);

struct EvalReport {
  std::vector<std::string> classes;  // ascending
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<double> per_class_ap;
  std::size_t total = 0;
};

/// Confusion matrix, accuracy, and per-class average precision of ranking the
/// test set by each class score.
EvalReport evaluate(std::span<const Prediction> predictions, std::span<const std::string> truth,
                    std::span<const std::string> classes);

/// Sorted distinct labels.
std::vector<std::string> class_list(std::span<const std::string> labels);

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& ids, const Matrix& m);
void write_predictions_csv(std::ostream& out, std::span<const Prediction> predictions,
                           std::span<const std::string> ids, std::span<const std::string> truth);
void write_report_json(std::ostream& out, const EvalReport& report);

}  // namespace soda::cls
