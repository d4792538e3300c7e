#pragma once

// External validation of a predicted partition against ground truth, and the
// age accuracy conventions used for attribute evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "album/face_model.hpp"

namespace album {

enum class UnassignedPolicy { exclude, singleton };

inline std::string_view to_string(UnassignedPolicy p) { return p == UnassignedPolicy::exclude ? "exclude" : "singleton"; }

inline UnassignedPolicy parse_unassigned_policy(std::string_view text) {
  if (text == "exclude") return UnassignedPolicy::exclude;
  if (text == "singleton") return UnassignedPolicy::singleton;
  throw ValidationError("unknown unassigned policy '" + std::string(text) + "'");
}

// Contingency table between two labelings of the same items.
class Contingency {
 public:
  Contingency(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw ValidationError("labelings differ in length");
    n_ = pred.size();
    std::map<int, std::size_t> rows, cols;
    for (int l : pred) rows.emplace(l, rows.size());
    for (int l : truth) cols.emplace(l, cols.size());
    // Re-index in label order so results do not depend on item order.
    std::size_t k = 0;
    for (auto& [label, idx] : rows) idx = k++;
    k = 0;
    for (auto& [label, idx] : cols) idx = k++;
    row_sums_.assign(rows.size(), 0);
    col_sums_.assign(cols.size(), 0);
    cells_.assign(rows.size() * cols.size(), 0);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t r = rows[pred[i]], c = cols[truth[i]];
      ++cells_[r * cols.size() + c];
      ++row_sums_[r];
      ++col_sums_[c];
    }
  }

  std::size_t n() const { return n_; }
  std::size_t rows() const { return row_sums_.size(); }
  std::size_t cols() const { return col_sums_.size(); }
  std::size_t cell(std::size_t r, std::size_t c) const { return cells_[r * cols() + c]; }
  const std::vector<std::size_t>& row_sums() const { return row_sums_; }
  const std::vector<std::size_t>& col_sums() const { return col_sums_; }

  // Same grouping on both sides: every nonempty row meets exactly one column and vice versa.
  bool is_bijective() const {
    if (rows() != cols()) return false;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (std::find(cells_.begin() + static_cast<std::ptrdiff_t>(r * cols()),
                    cells_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols()),
                    row_sums_[r]) == cells_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols())) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_sums_, col_sums_, cells_;
};

// Pairs two partitions over the same face ids. With `exclude`, faces
// unassigned in either partition are dropped; with `singleton`, every
// unassigned face becomes its own cluster.
inline std::pair<std::vector<int>, std::vector<int>> align(const Partition& pred, const Partition& truth,
                                                           UnassignedPolicy policy = UnassignedPolicy::exclude) {
  if (pred.size() != truth.size()) throw ValidationError("partitions cover different face sets");
  std::vector<int> a, b;
  a.reserve(pred.size());
  b.reserve(pred.size());
  int fresh_a = static_cast<int>(pred.num_clusters());
  int fresh_b = static_cast<int>(truth.num_clusters());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::string& id = pred.face_ids()[i];
    if (!truth.contains(id)) throw ValidationError("face '" + id + "' missing from ground truth");
    int la = pred.labels()[i];
    int lb = truth.label_of(id);
    if (la < 0 || lb < 0) {
      if (policy == UnassignedPolicy::exclude) continue;
      if (la < 0) la = fresh_a++;
      if (lb < 0) lb = fresh_b++;
    }
    a.push_back(la);
    b.push_back(lb);
  }
  return {std::move(a), std::move(b)};
}

namespace detail {

inline double choose2(std::size_t x) { return x < 2 ? 0.0 : 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

inline double entropy(const std::vector<std::size_t>& sums, std::size_t n) {
  double h = 0.0;
  for (std::size_t s : sums) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

inline double mutual_information(const Contingency& t) {
  const double n = static_cast<double>(t.n());
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const std::size_t nij = t.cell(r, c);
      if (nij == 0) continue;
      const double v = static_cast<double>(nij);
      mi += v / n * std::log(n * v / (static_cast<double>(t.row_sums()[r]) * static_cast<double>(t.col_sums()[c])));
    }
  }
  return std::max(0.0, mi);
}

// E[MI] under the hypergeometric model of random labelings with fixed margins.
inline double expected_mutual_information(const Contingency& t) {
  const std::size_t n = t.n();
  const double nd = static_cast<double>(n);
  const double lg_n = std::lgamma(nd + 1.0);
  double emi = 0.0;
  for (std::size_t a : t.row_sums()) {
    for (std::size_t b : t.col_sums()) {
      const std::size_t lo = std::max<std::size_t>(1, a + b > n ? a + b - n : 0);
      const std::size_t hi = std::min(a, b);
      const double ad = static_cast<double>(a), bd = static_cast<double>(b);
      const double base = std::lgamma(ad + 1) + std::lgamma(bd + 1) + std::lgamma(nd - ad + 1) +
                          std::lgamma(nd - bd + 1) - lg_n;
      for (std::size_t nij = lo; nij <= hi; ++nij) {
        const double v = static_cast<double>(nij);
        const double log_p = base - std::lgamma(v + 1) - std::lgamma(ad - v + 1) - std::lgamma(bd - v + 1) -
                             std::lgamma(nd - ad - bd + v + 1);
        emi += v / nd * std::log(nd * v / (ad * bd)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

}  // namespace detail

inline double adjusted_rand_index(std::span<const int> pred, std::span<const int> truth) {
  const Contingency t(pred, truth);
  if (t.n() < 2 || t.is_bijective()) return 1.0;
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) sum_cells += detail::choose2(t.cell(r, c));
  }
  for (std::size_t a : t.row_sums()) sum_rows += detail::choose2(a);
  for (std::size_t b : t.col_sums()) sum_cols += detail::choose2(b);
  const double expected = sum_rows * sum_cols / detail::choose2(t.n());
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (sum_cells - expected) / denom;
}

// Arithmetic-mean normalization.
inline double adjusted_mutual_information(std::span<const int> pred, std::span<const int> truth) {
  const Contingency t(pred, truth);
  if (t.n() == 0 || t.is_bijective()) return 1.0;
  const double mi = detail::mutual_information(t);
  const double emi = detail::expected_mutual_information(t);
  const double normalizer = 0.5 * (detail::entropy(t.row_sums(), t.n()) + detail::entropy(t.col_sums(), t.n()));
  double denom = normalizer - emi;
  const double eps = std::numeric_limits<double>::epsilon();
  if (denom < 0.0) {
    denom = std::min(denom, -eps);
  } else {
    denom = std::max(denom, eps);
  }
  return (mi - emi) / denom;
}

struct HomogeneityCompleteness {
  double homogeneity;
  double completeness;
};

inline HomogeneityCompleteness homogeneity_completeness(std::span<const int> pred, std::span<const int> truth) {
  const Contingency t(pred, truth);
  if (t.n() == 0) return {1.0, 1.0};
  if (t.is_bijective()) return {1.0, 1.0};
  const double n = static_cast<double>(t.n());
  double h_truth_given_pred = 0.0, h_pred_given_truth = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const double nij = static_cast<double>(t.cell(r, c));
      if (nij == 0.0) continue;
      h_truth_given_pred -= nij / n * std::log(nij / static_cast<double>(t.row_sums()[r]));
      h_pred_given_truth -= nij / n * std::log(nij / static_cast<double>(t.col_sums()[c]));
    }
  }
  const double h_truth = detail::entropy(t.col_sums(), t.n());
  const double h_pred = detail::entropy(t.row_sums(), t.n());
  const double h = h_truth == 0.0 ? 1.0 : 1.0 - h_truth_given_pred / h_truth;
  const double c = h_pred == 0.0 ? 1.0 : 1.0 - h_pred_given_truth / h_pred;
  return {std::clamp(h, 0.0, 1.0), std::clamp(c, 0.0, 1.0)};
}

struct BCubed {
  double precision;
  double recall;
  double f;
};

inline BCubed bcubed(std::span<const int> pred, std::span<const int> truth) {
  const Contingency t(pred, truth);
  if (t.n() == 0) return {1.0, 1.0, 1.0};
  double p = 0.0, r = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      const double nij = static_cast<double>(t.cell(i, j));
      if (nij == 0.0) continue;
      p += nij * nij / static_cast<double>(t.row_sums()[i]);
      r += nij * nij / static_cast<double>(t.col_sums()[j]);
    }
  }
  const double n = static_cast<double>(t.n());
  p /= n;
  r /= n;
  return {p, r, p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r)};
}

// Partition-level wrappers.

inline double adjusted_rand_index(const Partition& pred, const Partition& truth,
                                  UnassignedPolicy policy = UnassignedPolicy::exclude) {
  const auto [a, b] = align(pred, truth, policy);
  return adjusted_rand_index(a, b);
}

inline double adjusted_mutual_information(const Partition& pred, const Partition& truth,
                                          UnassignedPolicy policy = UnassignedPolicy::exclude) {
  const auto [a, b] = align(pred, truth, policy);
  return adjusted_mutual_information(a, b);
}

inline HomogeneityCompleteness homogeneity_completeness(const Partition& pred, const Partition& truth,
                                                        UnassignedPolicy policy = UnassignedPolicy::exclude) {
  const auto [a, b] = align(pred, truth, policy);
  return homogeneity_completeness(a, b);
}

inline BCubed bcubed(const Partition& pred, const Partition& truth,
                     UnassignedPolicy policy = UnassignedPolicy::exclude) {
  const auto [a, b] = align(pred, truth, policy);
  return bcubed(a, b);
}

struct EvaluationReport {
  double ari = 0.0;
  double ami = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double bcubed_precision = 0.0;
  double bcubed_recall = 0.0;
  double bcubed_f = 0.0;
  double k_over_c = 0.0;
  std::size_t evaluated_faces = 0;
  std::size_t num_clusters = 0;
  std::size_t num_classes = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["ari"] = ari;
    j["ami"] = ami;
    j["homogeneity"] = homogeneity;
    j["completeness"] = completeness;
    j["bcubed_precision"] = bcubed_precision;
    j["bcubed_recall"] = bcubed_recall;
    j["bcubed_f"] = bcubed_f;
    j["k_over_c"] = k_over_c;
    j["evaluated_faces"] = evaluated_faces;
    j["num_clusters"] = num_clusters;
    j["num_classes"] = num_classes;
    return j;
  }
};

inline EvaluationReport evaluate(std::span<const int> pred, std::span<const int> truth) {
  EvaluationReport r;
  const Contingency t(pred, truth);
  r.evaluated_faces = t.n();
  r.num_clusters = t.rows();
  r.num_classes = t.cols();
  r.ari = adjusted_rand_index(pred, truth);
  r.ami = adjusted_mutual_information(pred, truth);
  const auto hc = homogeneity_completeness(pred, truth);
  r.homogeneity = hc.homogeneity;
  r.completeness = hc.completeness;
  const auto bc = bcubed(pred, truth);
  r.bcubed_precision = bc.precision;
  r.bcubed_recall = bc.recall;
  r.bcubed_f = bc.f;
  r.k_over_c = r.num_classes == 0 ? 0.0 : static_cast<double>(r.num_clusters) / static_cast<double>(r.num_classes);
  return r;
}

inline EvaluationReport evaluate(const Partition& pred, const Partition& truth,
                                 UnassignedPolicy policy = UnassignedPolicy::exclude) {
  const auto [a, b] = align(pred, truth, policy);
  return evaluate(a, b);
}

// ---------------------------------------------------------------------------
// Age accuracy

enum class AgeAccuracyMode { adience_bins, within_5_years };

inline AgeAccuracyMode parse_age_mode(std::string_view text) {
  if (text == "adience") return AgeAccuracyMode::adience_bins;
  if (text == "within5") return AgeAccuracyMode::within_5_years;
  throw ValidationError("unknown age accuracy mode '" + std::string(text) + "'");
}

struct AgeRange {
  double lo, hi;
};

inline constexpr AgeRange kAdienceRanges[] = {{0, 2},   {4, 6},   {8, 13},  {15, 20},
                                              {25, 32}, {38, 43}, {48, 53}, {60, std::numeric_limits<double>::infinity()}};

// Index of the Adience range holding the age; ages in a gap go to the range
// with the nearer boundary, the lower one on an exact midpoint.
inline std::size_t adience_bin(double age) {
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < std::size(kAdienceRanges); ++k) {
    const auto& r = kAdienceRanges[k];
    const double gap = age < r.lo ? r.lo - age : (age > r.hi ? age - r.hi : 0.0);
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

inline double age_range_accuracy(std::span<const double> predicted, std::span<const double> truth,
                                 AgeAccuracyMode mode) {
  if (predicted.size() != truth.size()) throw ValidationError("age lists differ in length");
  if (predicted.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool ok = mode == AgeAccuracyMode::adience_bins ? adience_bin(predicted[i]) == adience_bin(truth[i])
                                                          : std::abs(predicted[i] - truth[i]) <= 5.0;
    correct += ok ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

}  // namespace album
