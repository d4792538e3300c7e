#pragma once

// Video clips: frame sampling, clustering faces within one clip, and
// collapsing each within-clip cluster to a single gallery record.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "album/face_model.hpp"
#include "album/hac.hpp"

namespace album {

struct TrackRecord {
  std::string face_id;
  std::string media_id;
  std::vector<std::string> member_ids;
  std::vector<double> embedding;
  std::optional<std::vector<double>> age_posterior;
  std::optional<std::vector<double>> gender_posterior;
  Date created_at;
  int first_frame = 0;

  std::size_t frame_count() const { return member_ids.size(); }

  FaceObservation as_observation() const {
    FaceObservation o;
    o.face_id = face_id;
    o.media_id = media_id;
    o.media_kind = MediaKind::video;
    o.frame_index = first_frame;
    o.created_at = created_at;
    o.embedding = embedding;
    o.age_posterior = age_posterior;
    o.gender_posterior = gender_posterior;
    return o;
  }
};

namespace detail {

inline void require_single_clip(std::span<const FaceObservation> observations) {
  for (const auto& o : observations) {
    if (o.media_id != observations.front().media_id) throw ValidationError("observations span several media_ids");
  }
}

// Element-wise mean of the present vectors, rescaled to sum 1.
inline std::optional<std::vector<double>> mean_posterior(const std::vector<const std::vector<double>*>& present) {
  if (present.empty()) return std::nullopt;
  std::vector<double> mean(present.front()->size(), 0.0);
  for (const auto* p : present) {
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += (*p)[k];
  }
  double total = 0.0;
  for (double v : mean) total += v;
  for (double& v : mean) v /= total;
  return mean;
}

}  // namespace detail

// Keeps frames whose index is a multiple of stride.
inline std::vector<FaceObservation> sample_frames(std::span<const FaceObservation> observations, int stride) {
  if (stride < 1) throw ValidationError("frame stride must be at least 1");
  detail::require_single_clip(observations);
  std::vector<FaceObservation> kept;
  for (const auto& o : observations) {
    if (o.frame_index % stride == 0) kept.push_back(o);
  }
  return kept;
}

// Collapses the given faces (one record per member, already sorted) into a track.
inline TrackRecord collapse_track(std::span<const FaceObservation> members, std::string track_id) {
  if (members.empty()) throw ValidationError("cannot collapse an empty track");
  TrackRecord t;
  t.face_id = std::move(track_id);
  t.media_id = members.front().media_id;
  t.created_at = members.front().created_at;
  t.first_frame = members.front().frame_index;
  t.embedding.assign(members.front().embedding.size(), 0.0);
  std::vector<const std::vector<double>*> ages, genders;
  for (const auto& m : members) {
    t.member_ids.push_back(m.face_id);
    t.created_at = std::min(t.created_at, m.created_at);
    t.first_frame = std::min(t.first_frame, m.frame_index);
    for (std::size_t k = 0; k < t.embedding.size(); ++k) t.embedding[k] += m.embedding[k];
    if (m.age_posterior) ages.push_back(&*m.age_posterior);
    if (m.gender_posterior) genders.push_back(&*m.gender_posterior);
  }
  double norm = 0.0;
  for (double v : t.embedding) norm += v * v;
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw ValidationError("track '" + t.face_id + "' has a zero mean embedding");
  for (double& v : t.embedding) v /= norm;
  t.age_posterior = detail::mean_posterior(ages);
  t.gender_posterior = detail::mean_posterior(genders);
  return t;
}

// Average-linkage clustering of one clip's faces, cut at threshold; one
// track per flat cluster. Input order does not matter: faces are processed
// by (frame_index, face_id), and tracks are numbered by their earliest face.
inline std::vector<TrackRecord> cluster_clip(std::span<const FaceObservation> observations, double threshold) {
  if (observations.empty()) throw ValidationError("cluster_clip needs at least one face");
  if (!(threshold > 0.0)) throw ValidationError("clip threshold must be positive");
  detail::require_single_clip(observations);

  std::vector<FaceObservation> faces(observations.begin(), observations.end());
  std::sort(faces.begin(), faces.end(), [](const FaceObservation& a, const FaceObservation& b) {
    if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
    return a.face_id < b.face_id;
  });

  std::vector<int> labels(faces.size(), 0);
  if (faces.size() > 1) {
    std::vector<std::vector<double>> points;
    points.reserve(faces.size());
    for (const auto& f : faces) points.push_back(f.embedding);
    labels = cut_labels(linkage(pairwise_distances(points), LinkageKind::average), threshold);
  }
  const int count = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<FaceObservation>> groups(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < faces.size(); ++i) groups[static_cast<std::size_t>(labels[i])].push_back(faces[i]);

  std::vector<TrackRecord> tracks;
  tracks.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    tracks.push_back(collapse_track(groups[g], faces.front().media_id + "#track" + std::to_string(g)));
  }
  return tracks;
}

// Photos plus one synthetic video record per track.
inline Dataset merge_into_gallery(std::span<const FaceObservation> photos, std::span<const TrackRecord> tracks) {
  std::vector<FaceObservation> all(photos.begin(), photos.end());
  std::unordered_set<std::string> ids;
  for (const auto& p : photos) ids.insert(p.face_id);
  for (const auto& t : tracks) {
    if (!ids.insert(t.face_id).second) throw ValidationError("track id '" + t.face_id + "' collides with another record");
    all.push_back(t.as_observation());
  }
  return Dataset(std::move(all));
}

}  // namespace album
