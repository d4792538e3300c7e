#pragma once

// Rank-order distance clustering over exact nearest-neighbor lists.
//
// Item level: with O_a(b) the 1-based rank of b in a's neighbor list
// (O_a(a) = 0) and f_a(i) the i-th neighbor of a (f_a(0) = a),
//
//   d(a,b) = sum_{i=0..O_a(b)} O_b(f_a(i))
//   D(a,b) = (d(a,b) + d(b,a)) / min(O_a(b), O_b(a))
//
// Cluster level (an interpretation; the cluster measures are not pinned
// down elsewhere): the rank-order distance between clusters is the minimum
// item-level D over cross pairs, and the normalized distance is the minimum
// cross-pair Euclidean distance divided by the mean, over members of both
// clusters, of each member's average distance to its K nearest neighbors.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "album/face_model.hpp"
#include "album/hac.hpp"

namespace album {

class NeighborTable {
 public:
  // Ties in distance are broken by ascending tie_keys (defaults to index).
  static NeighborTable build(const CondensedDistanceMatrix& dist, std::span<const std::size_t> tie_keys = {}) {
    const std::size_t n = dist.n();
    std::vector<std::size_t> keys(tie_keys.begin(), tie_keys.end());
    if (keys.empty()) {
      keys.resize(n);
      std::iota(keys.begin(), keys.end(), std::size_t{0});
    }
    if (keys.size() != n) throw ValidationError("tie_keys must cover every item");
    NeighborTable t;
    t.n_ = n;
    t.lists_.assign(n, {});
    t.ranks_.assign(n * n, 0);
    for (std::size_t a = 0; a < n; ++a) {
      auto& list = t.lists_[a];
      list.reserve(n - 1);
      for (std::size_t b = 0; b < n; ++b) {
        if (b != a) list.push_back(static_cast<std::uint32_t>(b));
      }
      std::sort(list.begin(), list.end(), [&](std::uint32_t x, std::uint32_t y) {
        const double dx = dist(a, x), dy = dist(a, y);
        if (dx != dy) return dx < dy;
        return keys[x] < keys[y];
      });
      for (std::size_t r = 0; r < list.size(); ++r) t.ranks_[a * n + list[r]] = static_cast<std::uint32_t>(r + 1);
    }
    return t;
  }

  std::size_t size() const { return n_; }

  // Other items of a, nearest first.
  std::span<const std::uint32_t> neighbors(std::size_t a) const { return lists_[a]; }

  // O_a(b): 1-based position of b in a's list; 0 when a == b.
  std::size_t rank(std::size_t a, std::size_t b) const { return ranks_[a * n_ + b]; }

  // f_a(i): a itself for i = 0, else the i-th nearest neighbor.
  std::size_t neighbor(std::size_t a, std::size_t i) const { return i == 0 ? a : lists_[a][i - 1]; }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<std::uint32_t>> lists_;
  std::vector<std::uint32_t> ranks_;
};

inline double rank_order_distance(std::size_t a, std::size_t b, const NeighborTable& table) {
  if (a == b) throw ValidationError("rank_order_distance needs two distinct items");
  if (a >= table.size() || b >= table.size()) throw ValidationError("item out of range");
  auto asymmetric = [&](std::size_t x, std::size_t y) {
    double sum = 0.0;
    const std::size_t stop = table.rank(x, y);
    for (std::size_t i = 0; i <= stop; ++i) sum += static_cast<double>(table.rank(y, table.neighbor(x, i)));
    return sum;
  };
  const double denom = static_cast<double>(std::min(table.rank(a, b), table.rank(b, a)));
  return (asymmetric(a, b) + asymmetric(b, a)) / denom;
}

struct RankOrderOptions {
  double rank_threshold = 1.6;
  double norm_dist_threshold = 1.0;
  std::size_t knn = 9;
};

namespace detail {

inline std::vector<std::size_t> id_order_keys(const Dataset& dataset) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return dataset[x].face_id < dataset[y].face_id; });
  std::vector<std::size_t> keys(dataset.size());
  for (std::size_t r = 0; r < order.size(); ++r) keys[order[r]] = r;
  return keys;
}

// Mean distance from each item to its first k neighbors.
inline std::vector<double> knn_means(const CondensedDistanceMatrix& dist, const NeighborTable& table, std::size_t k) {
  const std::size_t n = dist.n();
  const std::size_t kk = std::min(k, n - 1);
  std::vector<double> out(n, 0.0);
  if (kk == 0) return out;
  for (std::size_t a = 0; a < n; ++a) {
    double s = 0.0;
    for (std::size_t i = 1; i <= kk; ++i) s += dist(a, table.neighbor(a, i));
    out[a] = s / static_cast<double>(kk);
  }
  return out;
}

inline double normalized_distance(double min_euclid, double knn_sum, std::size_t members) {
  const double phi = knn_sum / static_cast<double>(members);
  if (min_euclid == 0.0) return 0.0;
  if (phi == 0.0) return std::numeric_limits<double>::infinity();
  return min_euclid / phi;
}

}  // namespace detail

// Round-based merging: every round all cluster pairs passing both thresholds
// are merged (transitively), then cluster-level distances are refreshed.
// Stops when a round merges nothing.
inline Partition rank_order_cluster(const Dataset& dataset, const RankOrderOptions& options) {
  if (!(options.rank_threshold > 0.0) || !(options.norm_dist_threshold > 0.0)) {
    throw ValidationError("rank-order thresholds must be positive");
  }
  if (options.knn == 0) throw ValidationError("knn must be positive");
  const std::size_t n = dataset.size();
  if (n == 0) return Partition{};
  if (n == 1) return Partition(dataset.face_ids(), {0});

  const auto dist = pairwise_distances(dataset);
  const auto keys = detail::id_order_keys(dataset);
  const auto table = NeighborTable::build(dist, keys);
  const auto knn = detail::knn_means(dist, table, options.knn);

  // Cluster-level state over slots; slot i starts as item i.
  std::vector<double> rank_d(CondensedDistanceMatrix::condensed_size(n));
  std::vector<double> euclid_d = dist.values();
  for (std::size_t a = 0, k = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) rank_d[k++] = rank_order_distance(a, b, table);
  }
  auto idx = [n](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return CondensedDistanceMatrix::offset(n, i, j);
  };
  std::vector<char> active(n, 1);
  std::vector<double> knn_sum = knn;
  std::vector<std::size_t> members(n, 1);
  std::vector<std::size_t> slot_of(n);
  std::iota(slot_of.begin(), slot_of.end(), std::size_t{0});

  std::vector<std::size_t> parent(n);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (;;) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    bool merged = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const std::size_t k = idx(i, j);
        if (rank_d[k] >= options.rank_threshold) continue;
        const double nd = detail::normalized_distance(euclid_d[k], knn_sum[i] + knn_sum[j], members[i] + members[j]);
        if (nd >= options.norm_dist_threshold) continue;
        const std::size_t ri = find(i), rj = find(j);
        if (ri != rj) {
          parent[std::max(ri, rj)] = std::min(ri, rj);
          merged = true;
        }
      }
    }
    if (!merged) break;
    // Fold each slot into its root (the smallest slot of its group).
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s]) continue;
      const std::size_t r = find(s);
      if (r == s) continue;
      for (std::size_t t = 0; t < n; ++t) {
        if (!active[t] || t == s || t == r) continue;
        rank_d[idx(r, t)] = std::min(rank_d[idx(r, t)], rank_d[idx(s, t)]);
        euclid_d[idx(r, t)] = std::min(euclid_d[idx(r, t)], euclid_d[idx(s, t)]);
      }
      knn_sum[r] += knn_sum[s];
      members[r] += members[s];
      active[s] = 0;
    }
    for (std::size_t item = 0; item < n; ++item) slot_of[item] = find(slot_of[item]);
  }

  std::vector<int> raw(n);
  for (std::size_t item = 0; item < n; ++item) raw[item] = static_cast<int>(slot_of[item]);
  return Partition::from_assignment(dataset.face_ids(), raw);
}

inline Partition rank_order_cluster(const Dataset& dataset, double rank_threshold, double norm_dist_threshold) {
  RankOrderOptions options;
  options.rank_threshold = rank_threshold;
  options.norm_dist_threshold = norm_dist_threshold;
  return rank_order_cluster(dataset, options);
}

}  // namespace album
