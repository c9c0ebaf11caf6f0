#include "soda/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "soda/error.hpp"
#include "soda/parallel.hpp"
#include "soda/random.hpp"

namespace soda::cls {

DiMatrix pairwise_matrix(std::span<const SymbolSequence> corpus, int order_k, const info::LambdaPolicy& policy,
                         std::size_t threads) {
  const std::size_t K = corpus.size();
  if (K < 2) throw Error(ErrorCode::EmptyInput, "pairwise matrix needs at least two sequences");
  DiMatrix out;
  for (const auto& s : corpus) out.ids.push_back(s.sequence_id());
  out.forward = Matrix(K, K);
  out.sym = Matrix(K, K);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      if (i != j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), static_cast<unsigned>(threads), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    try {
      out.forward.at(i, j) = info::directed_information(corpus[i], corpus[j], order_k, policy).value;
    } catch (const Error& e) {
      throw Error(e.code(), "pair (" + out.ids[i] + ", " + out.ids[j] + "): " + e.what());
    }
  });
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      const double v = out.forward.at(i, j) + out.forward.at(j, i);
      out.sym.at(i, j) = v;
      out.sym.at(j, i) = v;
    }
  }
  return out;
}

std::vector<std::string> class_list(std::span<const std::string> labels) {
  std::vector<std::string> c(labels.begin(), labels.end());
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

Split split(std::span<const std::string> labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "split ratio must lie in (0, 1)");
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "cannot split an empty corpus");
  const auto classes = class_list(labels);
  std::vector<std::vector<std::size_t>> members(classes.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    members[c].push_back(i);
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (members[c].size() < 2)
      throw Error(ErrorCode::ClassTooSmall, "class '" + classes[c] + "' has " + std::to_string(members[c].size()) +
                                                " member(s); at least 2 are needed");
  }

  // Largest-remainder allocation of round(ratio * N) training slots.
  const double n = static_cast<double>(labels.size());
  const auto total = static_cast<std::size_t>(std::floor(ratio * n + 0.5));
  std::vector<std::size_t> quota(classes.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double share = ratio * static_cast<double>(members[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(share));
    assigned += quota[c];
    remainder.emplace_back(share - std::floor(share), c);
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainder.size(); ++r, ++assigned) ++quota[remainder[r].second];
  for (std::size_t c = 0; c < classes.size(); ++c) quota[c] = std::clamp<std::size_t>(quota[c], 1, members[c].size() - 1);

  const CounterRng master(seed);
  Split out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto m = members[c];
    RngStream rng(master.split(c));
    for (std::size_t i = m.size(); i-- > 1;) std::swap(m[i], m[static_cast<std::size_t>(rng.below(i + 1))]);
    out.train.insert(out.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    out.test.insert(out.test.end(), m.begin() + static_cast<std::ptrdiff_t>(quota[c]), m.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<Prediction> nn_classify(const DiMatrix& matrix, std::span<const std::size_t> train,
                                    std::span<const std::string> train_labels, std::span<const std::size_t> test,
                                    std::size_t k_neighbors) {
  if (train.empty()) throw Error(ErrorCode::NoTrainData, "nearest-neighbor classification needs training data");
  if (train.size() != train_labels.size())
    throw Error(ErrorCode::LengthMismatch, "training ids and labels differ in length");
  if (k_neighbors < 1) throw Error(ErrorCode::InvalidArgument, "k_neighbors must be at least 1");
  const std::size_t K = matrix.ids.size();
  for (std::size_t i : train)
    if (i >= K) throw Error(ErrorCode::InvalidArgument, "training index outside the matrix");
  for (std::size_t i : test)
    if (i >= K) throw Error(ErrorCode::InvalidArgument, "test index outside the matrix");
  const auto classes = class_list(train_labels);

  std::vector<Prediction> out;
  for (std::size_t t : test) {
    std::vector<std::size_t> order;
    for (std::size_t r = 0; r < train.size(); ++r)
      if (train[r] != t) order.push_back(r);
    if (order.empty()) throw Error(ErrorCode::NoTrainData, "no training sequence other than the query");
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return matrix.sym.at(t, train[a]) > matrix.sym.at(t, train[b]);
    });

    Prediction p;
    p.index = t;
    p.class_scores.assign(classes.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t r : order) {
      const auto c = static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), train_labels[r]) - classes.begin());
      p.class_scores[c] = std::max(p.class_scores[c], matrix.sym.at(t, train[r]));
    }

    const std::size_t k = std::min(k_neighbors, order.size());
    std::vector<std::size_t> votes(classes.size(), 0);
    std::vector<double> mass(classes.size(), 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      const auto c = static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), train_labels[order[r]]) - classes.begin());
      ++votes[c];
      mass[c] += matrix.sym.at(t, train[order[r]]);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes.size(); ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && votes[c] > 0 && mass[c] > mass[best])) best = c;
    }
    p.predicted = classes[best];
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double average_precision(const std::vector<double>& scores, const std::vector<bool>& relevant) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, acc = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!relevant[order[r]]) continue;
    hits += 1.0;
    acc += hits / static_cast<double>(r + 1);
  }
  return hits > 0.0 ? acc / hits : 0.0;
}

}  // namespace

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const std::string> truth,
                    std::span<const std::string> classes) {
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "nothing to evaluate");
  if (predictions.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(truth.size()) + " truth labels");
  EvalReport r;
  r.classes = class_list(classes);
  for (const auto& t : truth)
    if (!std::binary_search(r.classes.begin(), r.classes.end(), t)) {
      r.classes.push_back(t);
      std::sort(r.classes.begin(), r.classes.end());
    }
  const std::size_t C = r.classes.size();
  auto index_of = [&](const std::string& label) {
    return static_cast<std::size_t>(std::lower_bound(r.classes.begin(), r.classes.end(), label) - r.classes.begin());
  };
  r.confusion.assign(C, std::vector<std::size_t>(C, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::size_t t = index_of(truth[i]);
    const std::size_t p = index_of(predictions[i].predicted);
    if (p >= C || r.classes[p] != predictions[i].predicted)
      throw Error(ErrorCode::InvalidArgument, "prediction names unknown class '" + predictions[i].predicted + "'");
    ++r.confusion[t][p];
    if (t == p) ++correct;
  }
  r.total = predictions.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);

  const auto train_classes = class_list(classes);
  for (const auto& label : r.classes) {
    const auto it = std::lower_bound(train_classes.begin(), train_classes.end(), label);
    if (it == train_classes.end() || *it != label) {
      r.per_class_ap.push_back(0.0);
      continue;
    }
    const auto c = static_cast<std::size_t>(it - train_classes.begin());
    std::vector<double> scores;
    std::vector<bool> relevant;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      scores.push_back(c < predictions[i].class_scores.size() ? predictions[i].class_scores[c]
                                                              : -std::numeric_limits<double>::infinity());
      relevant.push_back(truth[i] == label);
    }
    r.per_class_ap.push_back(average_precision(scores, relevant));
  }
  return r;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& ids, const Matrix& m) {
  out << "id";
  for (const auto& id : ids) out << ',' << csv_field(id);
  out << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    out << csv_field(ids[i]);
    for (std::size_t j = 0; j < m.cols; ++j) out << ',' << real(m.at(i, j));
    out << '\n';
  }
}

void write_predictions_csv(std::ostream& out, std::span<const Prediction> predictions,
                           std::span<const std::string> ids, std::span<const std::string> truth) {
  out << "id,predicted,truth\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    out << csv_field(ids[predictions[i].index]) << ',' << csv_field(predictions[i].predicted) << ','
        << csv_field(truth[i]) << '\n';
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["total"] = report.total;
  j["classes"] = report.classes;
  j["confusion"] = report.confusion;
  nlohmann::ordered_json ap = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < report.classes.size(); ++c) ap[report.classes[c]] = report.per_class_ap[c];
  j["per_class_ap"] = ap;
  double mean_ap = 0.0;
  for (double a : report.per_class_ap) mean_ap += a;
  j["mean_ap"] = report.per_class_ap.empty() ? 0.0 : mean_ap / static_cast<double>(report.per_class_ap.size());
  out << j.dump(2) << '\n';
}

}  // namespace soda::cls
