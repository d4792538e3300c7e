#pragma once

// Album-specific cluster refinement: faces sharing a photo are forced apart,
// small clusters and clusters confined to a short date span are unassigned.

#include <algorithm>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "album/face_model.hpp"
#include "album/hac.hpp"

namespace album {

struct RefineConfig {
  bool separate_same_photo = true;
  std::size_t min_cluster_size = 4;
  long min_span_days = 0;
  double same_photo_penalty = 1e6;

  bool operator==(const RefineConfig&) const = default;
};

namespace detail {

inline bool has_same_photo_pair(const std::vector<std::size_t>& members, const std::vector<const FaceObservation*>& obs) {
  std::unordered_set<std::string> photos;
  for (std::size_t m : members) {
    if (obs[m]->media_kind != MediaKind::photo) continue;
    if (!photos.insert(obs[m]->media_id).second) return true;
  }
  return false;
}

template <typename DistanceFn>
Partition split_same_photo_impl(const Partition& partition, const Dataset& dataset, double cut_threshold,
                                double penalty, DistanceFn&& distance) {
  if (!(cut_threshold > 0.0)) throw ValidationError("cut threshold must be positive");
  if (!(penalty > cut_threshold)) throw ValidationError("same-photo penalty must exceed the cut threshold");

  std::vector<const FaceObservation*> obs(partition.size());
  std::vector<std::size_t> dataset_index(partition.size());
  for (std::size_t i = 0; i < partition.size(); ++i) {
    dataset_index[i] = dataset.index_of(partition.face_ids()[i]);
    obs[i] = &dataset[dataset_index[i]];
  }

  std::vector<int> raw(partition.size(), Partition::kUnassigned);
  int next = 0;
  for (const auto& members : partition.clusters()) {
    if (!has_same_photo_pair(members, obs)) {
      for (std::size_t m : members) raw[m] = next;
      ++next;
      continue;
    }
    std::vector<double> values;
    values.reserve(CondensedDistanceMatrix::condensed_size(members.size()));
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const auto* x = obs[members[a]];
        const auto* y = obs[members[b]];
        const bool same_photo = x->media_kind == MediaKind::photo && y->media_kind == MediaKind::photo &&
                                x->media_id == y->media_id;
        values.push_back(same_photo ? penalty : distance(dataset_index[members[a]], dataset_index[members[b]]));
      }
    }
    const auto dendrogram = linkage(CondensedDistanceMatrix(members.size(), std::move(values)), LinkageKind::complete);
    const auto sub = cut_labels(dendrogram, cut_threshold);
    const int count = *std::max_element(sub.begin(), sub.end()) + 1;
    for (std::size_t a = 0; a < members.size(); ++a) raw[members[a]] = next + sub[a];
    next += count;
  }
  return Partition::from_assignment(partition.face_ids(), raw);
}

}  // namespace detail

// Re-clusters (complete linkage) every cluster holding two faces of one photo,
// with those pairs set to `penalty`. Conflict-free clusters are left intact;
// frames of one video clip never conflict.
inline Partition split_same_photo(const Partition& partition, const Dataset& dataset, double cut_threshold,
                                  double penalty) {
  return detail::split_same_photo_impl(partition, dataset, cut_threshold, penalty, [&](std::size_t i, std::size_t j) {
    return euclidean(dataset[i].embedding, dataset[j].embedding);
  });
}

// Same, reusing precomputed distances over the whole dataset (e.g. with the
// born-year feature folded in).
inline Partition split_same_photo(const Partition& partition, const Dataset& dataset, double cut_threshold,
                                  double penalty, const CondensedDistanceMatrix& dataset_distances) {
  if (dataset_distances.n() != dataset.size()) throw ValidationError("distance matrix does not match dataset");
  return detail::split_same_photo_impl(partition, dataset, cut_threshold, penalty,
                                       [&](std::size_t i, std::size_t j) { return dataset_distances(i, j); });
}

// Unassigns clusters whose total weight is below min_size. Faces missing from
// `weights` count as 1.
inline Partition filter_small(const Partition& partition, std::size_t min_size,
                              const std::unordered_map<std::string, std::size_t>& weights = {}) {
  if (min_size == 0) throw ValidationError("min_size must be positive");
  std::vector<int> raw(partition.labels());
  for (const auto& members : partition.clusters()) {
    std::size_t total = 0;
    for (std::size_t m : members) {
      auto it = weights.find(partition.face_ids()[m]);
      total += it == weights.end() ? 1 : it->second;
    }
    if (total < min_size) {
      for (std::size_t m : members) raw[m] = Partition::kUnassigned;
    }
  }
  return Partition::from_assignment(partition.face_ids(), raw);
}

// Days between the earliest and the latest member.
inline long span_days(const std::vector<std::size_t>& members, const Partition& partition, const Dataset& dataset) {
  if (members.empty()) return 0;
  Date lo = dataset.at(partition.face_ids()[members.front()]).created_at;
  Date hi = lo;
  for (std::size_t m : members) {
    const Date d = dataset.at(partition.face_ids()[m]).created_at;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi - lo;
}

inline Partition filter_date_span(const Partition& partition, const Dataset& dataset, long min_span_days) {
  if (min_span_days < 0) throw ValidationError("min_span_days must be nonnegative");
  std::vector<int> raw(partition.labels());
  for (const auto& members : partition.clusters()) {
    if (span_days(members, partition, dataset) < min_span_days) {
      for (std::size_t m : members) raw[m] = Partition::kUnassigned;
    }
  }
  return Partition::from_assignment(partition.face_ids(), raw);
}

}  // namespace album
