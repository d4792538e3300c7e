#pragma once

// Brute-force reference implementations used only by the tests. None of
// these call into the library's algorithms; they recompute everything from
// definitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

enum class Kind { single, average, complete, weighted, median };

struct OracleMerge {
  std::size_t left, right;
  double height;
  std::size_t size;
};

// Recompute-from-scratch agglomeration. Every step evaluates all active
// cluster pairs directly from the points:
//   single/complete/average: min/max/mean over member pairs;
//   weighted: the midpoint recursion over the merge tree;
//   median: Euclidean distance between WPGMC medians (midpoints of child medians).
inline std::vector<OracleMerge> naive_linkage(const Points& pts, Kind kind) {
  const std::size_t n = pts.size();
  struct Cluster {
    std::size_t id;
    std::vector<std::size_t> members;
    int left = -1, right = -1;  // indices into `all` for composites
    std::vector<double> median;
  };
  std::vector<Cluster> all;
  for (std::size_t i = 0; i < n; ++i) all.push_back({i, {i}, -1, -1, pts[i]});
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});

  std::function<double(std::size_t, std::size_t)> weighted = [&](std::size_t x, std::size_t y) -> double {
    const Cluster& cx = all[x];
    if (cx.left >= 0) {
      return 0.5 * weighted(static_cast<std::size_t>(cx.left), y) + 0.5 * weighted(static_cast<std::size_t>(cx.right), y);
    }
    const Cluster& cy = all[y];
    if (cy.left >= 0) {
      return 0.5 * weighted(x, static_cast<std::size_t>(cy.left)) + 0.5 * weighted(x, static_cast<std::size_t>(cy.right));
    }
    return dist(pts[cx.members[0]], pts[cy.members[0]]);
  };

  auto cluster_distance = [&](std::size_t x, std::size_t y) {
    const auto& a = all[x].members;
    const auto& b = all[y].members;
    switch (kind) {
      case Kind::single: {
        double m = std::numeric_limits<double>::infinity();
        for (auto i : a) for (auto j : b) m = std::min(m, dist(pts[i], pts[j]));
        return m;
      }
      case Kind::complete: {
        double m = 0.0;
        for (auto i : a) for (auto j : b) m = std::max(m, dist(pts[i], pts[j]));
        return m;
      }
      case Kind::average: {
        double s = 0.0;
        for (auto i : a) for (auto j : b) s += dist(pts[i], pts[j]);
        return s / static_cast<double>(a.size() * b.size());
      }
      case Kind::weighted: return weighted(x, y);
      case Kind::median: return dist(all[x].median, all[y].median);
    }
    return 0.0;
  };

  std::vector<OracleMerge> out;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_key{0, 0};
    std::size_t bx = 0, by = 0;
    bool found = false;
    for (std::size_t p = 0; p < active.size(); ++p) {
      for (std::size_t q = p + 1; q < active.size(); ++q) {
        const double d = cluster_distance(active[p], active[q]);
        const std::pair<std::size_t, std::size_t> key = std::minmax(all[active[p]].id, all[active[q]].id);
        if (!found || d < best || (d == best && key < best_key)) {
          best = d;
          best_key = key;
          bx = p;
          by = q;
          found = true;
        }
      }
    }
    const std::size_t x = active[bx], y = active[by];
    Cluster merged;
    merged.id = n + out.size();
    merged.members = all[x].members;
    merged.members.insert(merged.members.end(), all[y].members.begin(), all[y].members.end());
    merged.left = static_cast<int>(x);
    merged.right = static_cast<int>(y);
    merged.median.resize(all[x].median.size());
    for (std::size_t k = 0; k < merged.median.size(); ++k) merged.median[k] = 0.5 * (all[x].median[k] + all[y].median[k]);
    out.push_back({best_key.first, best_key.second, best, merged.members.size()});
    all.push_back(std::move(merged));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(by));
    active[bx] = all.size() - 1;
  }
  return out;
}

// Flat labels after applying merges of height <= t (monotone trees).
inline std::vector<int> naive_cut(std::size_t n, const std::vector<OracleMerge>& merges, double t) {
  std::vector<std::set<std::size_t>> leaves(n + merges.size());
  for (std::size_t i = 0; i < n; ++i) leaves[i] = {i};
  std::vector<int> label(n, -1);
  std::vector<char> whole(n + merges.size(), 1);
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const auto& m = merges[k];
    leaves[n + k] = leaves[m.left];
    leaves[n + k].insert(leaves[m.right].begin(), leaves[m.right].end());
    whole[n + k] = whole[m.left] && whole[m.right] && m.height <= t;
  }
  // Largest whole subtrees, visited from the top.
  int next = 0;
  std::vector<int> root_label(n + merges.size(), -1);
  for (std::size_t node = n + merges.size(); node-- > 0;) {
    if (!whole[node]) continue;
    bool covered = false;
    for (auto leaf : leaves[node]) covered = covered || label[leaf] >= 0;
    if (covered) continue;
    for (auto leaf : leaves[node]) label[leaf] = next;
    ++next;
  }
  return label;
}

// ---------------------------------------------------------------------------
// Labelings

// All set partitions of n items as restricted growth strings.
inline std::vector<std::vector<int>> all_set_partitions(std::size_t n) {
  std::vector<std::vector<int>> out;
  std::vector<int> rgs(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int max_label) {
    if (i == n) {
      out.push_back(rgs);
      return;
    }
    for (int l = 0; l <= max_label + 1; ++l) {
      rgs[i] = l;
      rec(i + 1, std::max(max_label, l));
    }
  };
  if (n == 0) {
    out.push_back({});
    return out;
  }
  rgs[0] = 0;
  rec(1, 0);
  return out;
}

// Same grouping up to relabeling, checked pairwise.
inline bool same_grouping(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

inline std::size_t pairs_together(const std::vector<int>& l) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i + 1; j < l.size(); ++j) c += l[i] == l[j];
  return c;
}

inline std::size_t pairs_together_both(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) c += (a[i] == a[j]) && (b[i] == b[j]);
  return c;
}

// Sorted cluster sizes, used as a cache key for permutation expectations.
inline std::vector<std::size_t> margins(const std::vector<int>& l) {
  std::map<int, std::size_t> c;
  for (int x : l) ++c[x];
  std::vector<std::size_t> out;
  for (auto& [k, v] : c) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> labels_from_margins(const std::vector<std::size_t>& m) {
  std::vector<int> l;
  for (std::size_t k = 0; k < m.size(); ++k) l.insert(l.end(), m[k], static_cast<int>(k));
  return l;
}

inline double entropy(const std::vector<int>& l) {
  std::map<int, double> c;
  for (int x : l) c[x] += 1.0;
  double h = 0.0;
  const double n = static_cast<double>(l.size());
  for (auto& [k, v] : c) h -= v / n * std::log(v / n);
  return h;
}

// H(a | b): average over b-classes of the entropy of a inside the class.
inline double conditional_entropy(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < a.size(); ++i) groups[b[i]].push_back(a[i]);
  double h = 0.0;
  for (auto& [k, members] : groups) h += static_cast<double>(members.size()) / n * entropy(members);
  return h;
}

inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  return entropy(a) - conditional_entropy(a, b);
}

// Averages f(a, permuted b) over every permutation of item positions.
template <typename F>
double permutation_average(const std::vector<int>& a, const std::vector<int>& b, F&& f) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double sum = 0.0;
  std::size_t count = 0;
  std::vector<int> shuffled(b.size());
  do {
    for (std::size_t i = 0; i < b.size(); ++i) shuffled[i] = b[perm[i]];
    sum += f(a, shuffled);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / static_cast<double>(count);
}

class MetricOracle {
 public:
  double ari(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() < 2 || same_grouping(a, b)) return 1.0;
    const double index = static_cast<double>(pairs_together_both(a, b));
    const double expected = cached(ari_cache_, a, b, [](const auto& x, const auto& y) {
      return static_cast<double>(pairs_together_both(x, y));
    });
    const double max_index = 0.5 * static_cast<double>(pairs_together(a) + pairs_together(b));
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
  }

  double ami(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() || same_grouping(a, b)) return 1.0;
    const double mi = mutual_information(a, b);
    const double emi = cached(ami_cache_, a, b, [](const auto& x, const auto& y) { return mutual_information(x, y); });
    const double norm = 0.5 * (entropy(a) + entropy(b));
    const double denom = norm - emi;
    if (std::abs(denom) < 1e-15) return 0.0;
    return (mi - emi) / denom;
  }

  static std::pair<double, double> homogeneity_completeness(const std::vector<int>& pred, const std::vector<int>& truth) {
    const double ht = entropy(truth), hp = entropy(pred);
    const double h = ht == 0.0 ? 1.0 : 1.0 - conditional_entropy(truth, pred) / ht;
    const double c = hp == 0.0 ? 1.0 : 1.0 - conditional_entropy(pred, truth) / hp;
    return {h, c};
  }

  // Per-element BCubed.
  static std::tuple<double, double, double> bcubed(const std::vector<int>& pred, const std::vector<int>& truth) {
    const std::size_t n = pred.size();
    double p = 0.0, r = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      double same_cluster = 0, same_class = 0, both = 0;
      for (std::size_t o = 0; o < n; ++o) {
        const bool c = pred[o] == pred[e], t = truth[o] == truth[e];
        same_cluster += c;
        same_class += t;
        both += c && t;
      }
      p += both / same_cluster;
      r += both / same_class;
    }
    p /= static_cast<double>(n);
    r /= static_cast<double>(n);
    return {p, r, 2 * p * r / (p + r)};
  }

 private:
  using Key = std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;

  template <typename F>
  double cached(std::map<Key, double>& cache, const std::vector<int>& a, const std::vector<int>& b, F&& f) {
    Key key{margins(a), margins(b)};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double v = permutation_average(labels_from_margins(key.first), labels_from_margins(key.second), f);
    cache.emplace(std::move(key), v);
    return v;
  }

  std::map<Key, double> ari_cache_, ami_cache_;
};

// ---------------------------------------------------------------------------
// Rank-order

// O_a(b) by counting items ranked ahead of b in a's view (ties by index).
inline std::size_t rank_by_count(const Points& pts, std::size_t a, std::size_t b) {
  if (a == b) return 0;
  const double dab = dist(pts[a], pts[b]);
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < pts.size(); ++c) {
    if (c == a || c == b) continue;
    const double dac = dist(pts[a], pts[c]);
    if (dac < dab || (dac == dab && c < b)) ++ahead;
  }
  return ahead + 1;
}

// f_a(i): item whose rank in a's view is i.
inline std::size_t item_at_rank(const Points& pts, std::size_t a, std::size_t i) {
  for (std::size_t c = 0; c < pts.size(); ++c) {
    if (rank_by_count(pts, a, c) == i) return c;
  }
  return pts.size();
}

inline double rank_order_distance(const Points& pts, std::size_t a, std::size_t b) {
  auto asym = [&](std::size_t x, std::size_t y) {
    double s = 0.0;
    const std::size_t stop = rank_by_count(pts, x, y);
    for (std::size_t i = 0; i <= stop; ++i) s += static_cast<double>(rank_by_count(pts, y, item_at_rank(pts, x, i)));
    return s;
  };
  return (asym(a, b) + asym(b, a)) /
         static_cast<double>(std::min(rank_by_count(pts, a, b), rank_by_count(pts, b, a)));
}

// Round-based rank-order clustering, with every cluster-level quantity
// recomputed from items each round. Returns first-appearance labels.
inline std::vector<int> rank_order_cluster(const Points& pts, double rank_t, double norm_t, std::size_t knn) {
  const std::size_t n = pts.size();
  const std::size_t kk = std::min(knn, n - 1);
  std::vector<std::vector<double>> D(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) D[a][b] = rank_order_distance(pts, a, b);
  std::vector<double> knn_mean(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    double s = 0.0;
    for (std::size_t i = 1; i <= kk; ++i) s += dist(pts[a], pts[item_at_rank(pts, a, i)]);
    knn_mean[a] = kk ? s / static_cast<double>(kk) : 0.0;
  }
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  for (;;) {
    std::map<int, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters[label[i]].push_back(i);
    std::vector<std::vector<std::size_t>> cs;
    for (auto& [k, v] : clusters) cs.push_back(v);
    std::vector<std::size_t> parent(cs.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    bool merged = false;
    for (std::size_t p = 0; p < cs.size(); ++p) {
      for (std::size_t q = p + 1; q < cs.size(); ++q) {
        double rd = std::numeric_limits<double>::infinity(), ed = rd, phi = 0.0;
        for (auto a : cs[p]) for (auto b : cs[q]) {
          rd = std::min(rd, D[a][b]);
          ed = std::min(ed, dist(pts[a], pts[b]));
        }
        for (auto a : cs[p]) phi += knn_mean[a];
        for (auto b : cs[q]) phi += knn_mean[b];
        phi /= static_cast<double>(cs[p].size() + cs[q].size());
        const double nd = ed == 0.0 ? 0.0 : (phi == 0.0 ? std::numeric_limits<double>::infinity() : ed / phi);
        if (rd < rank_t && nd < norm_t) {
          const auto rp = find(p), rq = find(q);
          if (rp != rq) {
            parent[std::max(rp, rq)] = std::min(rp, rq);
            merged = true;
          }
        }
      }
    }
    if (!merged) break;
    for (std::size_t c = 0; c < cs.size(); ++c)
      for (auto item : cs[c]) label[item] = static_cast<int>(find(c));
  }
  std::map<int, int> remap;
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = remap.emplace(label[i], static_cast<int>(remap.size())).first->second;
  return out;
}

// ---------------------------------------------------------------------------
// Random helpers

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = e(rng));
  for (auto& x : p) x /= s;
  return p;
}

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim, bool nonnegative = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double s = 0.0;
  for (auto& x : v) {
    x = g(rng);
    if (nonnegative) x = std::abs(x);
    s += x * x;
  }
  s = std::sqrt(s);
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace oracle
