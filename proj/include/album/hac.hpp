#pragma once

// Condensed distance matrices and hierarchical agglomerative clustering with
// Lance-Williams updates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "album/face_model.hpp"

namespace album {

// Upper triangle of a symmetric distance matrix, row-major, without the diagonal.
class CondensedDistanceMatrix {
 public:
  CondensedDistanceMatrix() = default;

  CondensedDistanceMatrix(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (values_.size() != condensed_size(n_)) {
      throw ValidationError("condensed matrix for n=" + std::to_string(n_) + " needs " +
                            std::to_string(condensed_size(n_)) + " values, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("distance values must be finite and nonnegative");
    }
  }

  static constexpr std::size_t condensed_size(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

  // Position of entry (i, j), i < j.
  static constexpr std::size_t offset(std::size_t n, std::size_t i, std::size_t j) {
    return n * i - i * (i + 1) / 2 + (j - i - 1);
  }

  std::size_t n() const { return n_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return values_[offset(n_, i, j)];
  }

  // Distances restricted to the given items, in the given order.
  CondensedDistanceMatrix submatrix(std::span<const std::size_t> items) const {
    std::vector<double> sub;
    sub.reserve(condensed_size(items.size()));
    for (std::size_t a = 0; a < items.size(); ++a) {
      for (std::size_t b = a + 1; b < items.size(); ++b) sub.push_back((*this)(items[a], items[b]));
    }
    return CondensedDistanceMatrix(items.size(), std::move(sub));
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

using BornYearMap = std::unordered_map<std::string, double>;

// Born years enter the distance divided by this factor, so a decade of
// difference is commensurate with an embedding offset of 0.1.
inline constexpr double kBornYearScale = 100.0;

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline CondensedDistanceMatrix pairwise_distances(std::span<const std::vector<double>> points) {
  const std::size_t n = points.size();
  std::vector<double> values;
  values.reserve(CondensedDistanceMatrix::condensed_size(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (points[i].size() != points[j].size()) throw ValidationError("points differ in dimension");
      values.push_back(euclidean(points[i], points[j]));
    }
  }
  return CondensedDistanceMatrix(n, std::move(values));
}

// Euclidean distance between embeddings, optionally augmented with the
// scaled born-year difference:
//   sqrt(|x_i - x_j|^2 + w^2 (y_i - y_j)^2),  y = born_year / kBornYearScale.
inline CondensedDistanceMatrix pairwise_distances(const Dataset& dataset, double born_year_weight = 0.0,
                                                  const BornYearMap& born_years = {}) {
  if (dataset.empty()) throw ValidationError("pairwise_distances needs a nonempty dataset");
  if (!(born_year_weight >= 0.0) || !std::isfinite(born_year_weight)) {
    throw ValidationError("born_year_weight must be finite and nonnegative");
  }
  const std::size_t n = dataset.size();
  std::vector<double> years;
  if (born_year_weight > 0.0) {
    years.reserve(n);
    for (const auto& obs : dataset) {
      auto it = born_years.find(obs.face_id);
      if (it == born_years.end()) throw ValidationError("missing born year for '" + obs.face_id + "'");
      years.push_back(it->second / kBornYearScale);
    }
  }
  const double w2 = born_year_weight * born_year_weight;
  std::vector<double> values(CondensedDistanceMatrix::condensed_size(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& xi = dataset[i].embedding;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& xj = dataset[j].embedding;
      double s = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) {
        const double d = xi[c] - xj[c];
        s += d * d;
      }
      if (!years.empty()) {
        const double dy = years[i] - years[j];
        s += w2 * dy * dy;
      }
      values[k++] = std::sqrt(s);
    }
  }
  return CondensedDistanceMatrix(n, std::move(values));
}

enum class LinkageKind { single, average, complete, weighted, median };

inline constexpr LinkageKind kAllLinkageKinds[] = {LinkageKind::single, LinkageKind::average, LinkageKind::complete,
                                                   LinkageKind::weighted, LinkageKind::median};

inline std::string_view to_string(LinkageKind kind) {
  switch (kind) {
    case LinkageKind::single: return "single";
    case LinkageKind::average: return "average";
    case LinkageKind::complete: return "complete";
    case LinkageKind::weighted: return "weighted";
    case LinkageKind::median: return "median";
  }
  return "?";
}

inline LinkageKind parse_linkage(std::string_view text) {
  for (LinkageKind k : kAllLinkageKinds) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("unknown linkage '" + std::string(text) + "'");
}

struct Merge {
  std::size_t left;   // smaller node id
  std::size_t right;  // larger node id
  double height;
  std::size_t size;

  bool operator==(const Merge&) const = default;
};

// Merge history over n leaves. Leaves are nodes 0..n-1; the k-th merge
// creates node n+k.
class Dendrogram {
 public:
  Dendrogram() = default;

  Dendrogram(std::size_t leaves, std::vector<Merge> merges) : leaves_(leaves), merges_(std::move(merges)) {
    if (leaves_ == 0 ? !merges_.empty() : merges_.size() != leaves_ - 1) {
      throw ValidationError("dendrogram over " + std::to_string(leaves_) + " leaves needs n-1 merges");
    }
    std::vector<std::size_t> sizes(leaves_ + merges_.size(), 1);
    std::vector<char> consumed(sizes.size(), 0);
    for (std::size_t k = 0; k < merges_.size(); ++k) {
      const Merge& m = merges_[k];
      const std::size_t node = leaves_ + k;
      if (m.left >= node || m.right >= node || m.left == m.right) throw ValidationError("merge refers to an invalid node");
      if (consumed[m.left] || consumed[m.right]) throw ValidationError("node merged more than once");
      if (!(m.height >= 0.0)) throw ValidationError("negative merge height");
      consumed[m.left] = consumed[m.right] = 1;
      sizes[node] = sizes[m.left] + sizes[m.right];
      if (sizes[node] != m.size) throw ValidationError("merge size mismatch");
    }
  }

  std::size_t leaves() const { return leaves_; }
  const std::vector<Merge>& merges() const { return merges_; }

  bool is_monotone() const {
    for (std::size_t k = 1; k < merges_.size(); ++k) {
      if (merges_[k].height < merges_[k - 1].height) return false;
    }
    return true;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["merges"] = nlohmann::ordered_json::array();
    for (const auto& m : merges_) j["merges"].push_back({m.left, m.right, m.height, m.size});
    return j;
  }

 private:
  std::size_t leaves_ = 0;
  std::vector<Merge> merges_;
};

// Lance-Williams coefficients (alpha_i, alpha_j, beta, gamma):
//   d(k, i+j) = a_i d(k,i) + a_j d(k,j) + b d(i,j) + g |d(k,i) - d(k,j)|
struct LanceWilliams {
  double alpha_i, alpha_j, beta, gamma;
};

inline LanceWilliams lance_williams(LinkageKind kind, std::size_t size_i, std::size_t size_j) {
  switch (kind) {
    case LinkageKind::single: return {0.5, 0.5, 0.0, -0.5};
    case LinkageKind::complete: return {0.5, 0.5, 0.0, 0.5};
    case LinkageKind::average: {
      const double total = static_cast<double>(size_i + size_j);
      return {static_cast<double>(size_i) / total, static_cast<double>(size_j) / total, 0.0, 0.0};
    }
    case LinkageKind::weighted: return {0.5, 0.5, 0.0, 0.0};
    case LinkageKind::median: return {0.5, 0.5, -0.25, 0.0};
  }
  return {0.0, 0.0, 0.0, 0.0};
}

// Median linkage runs the recurrence on squared distances.
inline bool uses_squared_distances(LinkageKind kind) { return kind == LinkageKind::median; }

// Agglomerates the closest pair of clusters until one remains.
//
// Stored-matrix algorithm: each active slot caches its nearest active
// neighbor. After a merge only the merged slot and the slots whose cached
// neighbor was consumed are rescanned, so the typical cost is O(n^2) while
// inversions (median linkage) still resolve correctly. Equal distances are
// resolved by the smallest (min node id, max node id) pair.
inline Dendrogram linkage(const CondensedDistanceMatrix& dist, LinkageKind kind) {
  const std::size_t n = dist.n();
  if (n < 2) throw ValidationError("linkage needs at least 2 items");

  std::vector<double> d = dist.values();
  if (uses_squared_distances(kind)) {
    for (double& v : d) v *= v;
  }
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    if (i > j) std::swap(i, j);
    return d[CondensedDistanceMatrix::offset(n, i, j)];
  };

  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), std::size_t{0});
  std::vector<std::size_t> size(n, 1);
  std::vector<char> active(n, 1);

  struct Candidate {
    double dist = std::numeric_limits<double>::infinity();
    std::size_t partner = 0;
  };
  std::vector<Candidate> best(n);

  // Strict "a before b" on (distance, min node id, max node id).
  auto precedes = [&](double da, std::size_t a1, std::size_t a2, double db, std::size_t b1, std::size_t b2) {
    if (da != db) return da < db;
    const auto ka = std::minmax(node[a1], node[a2]);
    const auto kb = std::minmax(node[b1], node[b2]);
    return ka < kb;
  };

  auto rescan = [&](std::size_t i) {
    Candidate c;
    bool found = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      const double v = at(i, j);
      if (!found || precedes(v, i, j, c.dist, i, c.partner)) {
        c = {v, j};
        found = true;
      }
    }
    best[i] = c;
  };

  for (std::size_t i = 0; i < n; ++i) rescan(i);

  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      if (a == n || precedes(best[i].dist, i, best[i].partner, best[a].dist, a, best[a].partner)) a = i;
    }
    const std::size_t b = best[a].partner;
    const double dab = best[a].dist;
    const double height = uses_squared_distances(kind) ? std::sqrt(std::max(0.0, dab)) : dab;
    const auto [lo, hi] = std::minmax(node[a], node[b]);
    merges.push_back({lo, hi, std::max(0.0, height), size[a] + size[b]});

    const LanceWilliams lw = lance_williams(kind, size[a], size[b]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double dka = at(k, a);
      const double dkb = at(k, b);
      // The single and complete forms reduce to min and max; evaluating them
      // directly keeps tied distances bit-identical.
      if (kind == LinkageKind::single) {
        at(k, a) = std::min(dka, dkb);
      } else if (kind == LinkageKind::complete) {
        at(k, a) = std::max(dka, dkb);
      } else {
        at(k, a) = lw.alpha_i * dka + lw.alpha_j * dkb + lw.beta * dab + lw.gamma * std::abs(dka - dkb);
      }
    }
    active[b] = 0;
    node[a] = n + step;
    size[a] += size[b];

    if (step + 2 == n) break;
    rescan(a);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      if (best[k].partner == a || best[k].partner == b) {
        rescan(k);
      } else if (precedes(at(k, a), k, a, best[k].dist, k, best[k].partner)) {
        best[k] = {at(k, a), a};
      }
    }
  }
  return Dendrogram(n, std::move(merges));
}

// Flat cluster labels (contiguous, first-appearance order) from cutting the
// dendrogram: a subtree stays whole when no merge inside it is higher than
// the threshold. On monotone trees this is exactly "apply every merge with
// height <= threshold".
inline std::vector<int> cut_labels(const Dendrogram& dendrogram, double threshold) {
  if (!(threshold > 0.0)) throw ValidationError("cut threshold must be positive");
  const std::size_t n = dendrogram.leaves();
  const auto& merges = dendrogram.merges();
  std::vector<double> subtree_max(n + merges.size(), 0.0);
  std::vector<std::size_t> parent(n + merges.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const Merge& m = merges[k];
    const std::size_t id = n + k;
    subtree_max[id] = std::max({m.height, subtree_max[m.left], subtree_max[m.right]});
    if (subtree_max[id] <= threshold) {
      parent[find(m.left)] = id;
      parent[find(m.right)] = id;
    }
  }
  std::vector<int> labels(n);
  std::unordered_map<std::size_t, int> root_label;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = root_label.emplace(find(i), static_cast<int>(root_label.size()));
    labels[i] = it->second;
  }
  return labels;
}

inline Partition cut(const Dendrogram& dendrogram, double threshold, std::vector<std::string> face_ids) {
  if (face_ids.size() != dendrogram.leaves()) throw ValidationError("face_ids do not match dendrogram leaves");
  return Partition(std::move(face_ids), cut_labels(dendrogram, threshold));
}

// Leaves are named by their index.
inline Partition cut(const Dendrogram& dendrogram, double threshold) {
  std::vector<std::string> ids(dendrogram.leaves());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
  return cut(dendrogram, threshold, std::move(ids));
}

// Convenience: distances, linkage and cut over a dataset. A single face is its
// own cluster.
inline Partition hac_cluster(const Dataset& dataset, LinkageKind kind, double threshold,
                             double born_year_weight = 0.0, const BornYearMap& born_years = {}) {
  if (dataset.empty()) return Partition{};
  if (!(threshold > 0.0)) throw ValidationError("cut threshold must be positive");
  if (dataset.size() == 1) return Partition(dataset.face_ids(), {0});
  const auto dist = pairwise_distances(dataset, born_year_weight, born_years);
  return cut(linkage(dist, kind), threshold, dataset.face_ids());
}

}  // namespace album
