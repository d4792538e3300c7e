#pragma once

// End-to-end album organization: video tracks, gallery clustering,
// refinement, attribute fusion and the per-identity report.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "album/face_model.hpp"
#include "album/fusion.hpp"
#include "album/hac.hpp"
#include "album/metrics.hpp"
#include "album/rank_order.hpp"
#include "album/refine.hpp"
#include "album/video_tracks.hpp"

namespace album {

enum class ClusterMethod { hac, rank_order };

inline std::string_view to_string(ClusterMethod m) { return m == ClusterMethod::hac ? "hac" : "rank-order"; }

inline ClusterMethod parse_cluster_method(std::string_view text) {
  if (text == "hac") return ClusterMethod::hac;
  if (text == "rank-order") return ClusterMethod::rank_order;
  throw ValidationError("unknown clustering method '" + std::string(text) + "'");
}

struct PipelineConfig {
  ClusterMethod method = ClusterMethod::hac;
  LinkageKind linkage = LinkageKind::average;
  double cut_threshold = 0.9;
  std::optional<double> clip_threshold;  // defaults to cut_threshold
  int frame_stride = 3;
  RankOrderOptions rank_order;
  RefineConfig refine;
  FusionConfig fusion;
  double born_year_weight = 0.0;
  UnassignedPolicy unassigned = UnassignedPolicy::exclude;

  double effective_clip_threshold() const { return clip_threshold.value_or(cut_threshold); }

  // Refinement off: the report then carries the raw clustering.
  void disable_refinement() {
    refine.separate_same_photo = false;
    refine.min_cluster_size = 1;
    refine.min_span_days = 0;
  }

  void validate() const {
    if (!(cut_threshold > 0.0)) throw ValidationError("cut_threshold must be positive");
    if (clip_threshold && !(*clip_threshold > 0.0)) throw ValidationError("clip_threshold must be positive");
    if (frame_stride < 1) throw ValidationError("frame_stride must be at least 1");
    if (refine.min_cluster_size < 1) throw ValidationError("min_cluster_size must be positive");
    if (refine.min_span_days < 0) throw ValidationError("min_span_days must be nonnegative");
    if (refine.separate_same_photo && !(refine.same_photo_penalty > cut_threshold)) {
      throw ValidationError("same_photo_penalty must exceed cut_threshold");
    }
    if (fusion.gender == FusionKind::expected_value) throw ValidationError("gender fusion must be vote or product");
    if (fusion.age.top_l < 1 || fusion.age.top_l > kAgeClasses) throw ValidationError("top_l must lie in [1, 100]");
    if (!(born_year_weight >= 0.0)) throw ValidationError("born_year_weight must be nonnegative");
    if (!(rank_order.rank_threshold > 0.0) || !(rank_order.norm_dist_threshold > 0.0) || rank_order.knn == 0) {
      throw ValidationError("rank-order parameters must be positive");
    }
  }

  bool operator==(const PipelineConfig& o) const {
    return method == o.method && linkage == o.linkage && cut_threshold == o.cut_threshold &&
           clip_threshold == o.clip_threshold && frame_stride == o.frame_stride &&
           rank_order.rank_threshold == o.rank_order.rank_threshold &&
           rank_order.norm_dist_threshold == o.rank_order.norm_dist_threshold && rank_order.knn == o.rank_order.knn &&
           refine == o.refine && fusion == o.fusion && born_year_weight == o.born_year_weight &&
           unassigned == o.unassigned;
  }
};

// ---------------------------------------------------------------------------
// key = value config text

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ValidationError("config key '" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace detail

inline std::string to_config_text(const PipelineConfig& c) {
  using detail::format_double;
  std::ostringstream out;
  out << "method = " << to_string(c.method) << '\n'
      << "linkage = " << to_string(c.linkage) << '\n'
      << "cut_threshold = " << format_double(c.cut_threshold) << '\n'
      << "clip_threshold = " << (c.clip_threshold ? format_double(*c.clip_threshold) : std::string()) << '\n'
      << "frame_stride = " << c.frame_stride << '\n'
      << "rank_threshold = " << format_double(c.rank_order.rank_threshold) << '\n'
      << "norm_dist_threshold = " << format_double(c.rank_order.norm_dist_threshold) << '\n'
      << "rank_knn = " << c.rank_order.knn << '\n'
      << "separate_same_photo = " << (c.refine.separate_same_photo ? "true" : "false") << '\n'
      << "min_cluster_size = " << c.refine.min_cluster_size << '\n'
      << "min_span_days = " << c.refine.min_span_days << '\n'
      << "same_photo_penalty = " << format_double(c.refine.same_photo_penalty) << '\n'
      << "gender_fusion = " << to_string(c.fusion.gender) << '\n'
      << "age_fusion = " << to_string(c.fusion.age.kind) << '\n'
      << "top_l = " << c.fusion.age.top_l << '\n'
      << "age_index_offset = " << format_double(c.fusion.age_index_offset) << '\n'
      << "born_year_weight = " << format_double(c.born_year_weight) << '\n'
      << "unassigned = " << to_string(c.unassigned) << '\n';
  return out.str();
}

// Applies one key to a config.
inline void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "method") c.method = parse_cluster_method(value);
  else if (key == "linkage") c.linkage = parse_linkage(value);
  else if (key == "cut_threshold") c.cut_threshold = parse_double(key, value);
  else if (key == "clip_threshold") c.clip_threshold = value.empty() ? std::nullopt : std::optional(parse_double(key, value));
  else if (key == "frame_stride") c.frame_stride = static_cast<int>(parse_int(key, value));
  else if (key == "rank_threshold") c.rank_order.rank_threshold = parse_double(key, value);
  else if (key == "norm_dist_threshold") c.rank_order.norm_dist_threshold = parse_double(key, value);
  else if (key == "rank_knn") c.rank_order.knn = static_cast<std::size_t>(std::max(0LL, parse_int(key, value)));
  else if (key == "separate_same_photo") c.refine.separate_same_photo = parse_bool(key, value);
  else if (key == "min_cluster_size") c.refine.min_cluster_size = static_cast<std::size_t>(std::max(0LL, parse_int(key, value)));
  else if (key == "min_span_days") c.refine.min_span_days = static_cast<long>(parse_int(key, value));
  else if (key == "same_photo_penalty") c.refine.same_photo_penalty = parse_double(key, value);
  else if (key == "gender_fusion") c.fusion.gender = parse_fusion_kind(value);
  else if (key == "age_fusion") c.fusion.age.kind = parse_fusion_kind(value);
  else if (key == "top_l") c.fusion.age.top_l = static_cast<std::size_t>(std::max(0LL, parse_int(key, value)));
  else if (key == "age_index_offset") c.fusion.age_index_offset = parse_double(key, value);
  else if (key == "born_year_weight") c.born_year_weight = parse_double(key, value);
  else if (key == "unassigned") c.unassigned = parse_unassigned_policy(value);
  else throw ValidationError("unknown config key '" + key + "'");
}

// Lines of `key = value`; blank lines and `#` comments are ignored. Keys not
// present keep the values already in `base`.
inline PipelineConfig parse_config_text(std::string_view text, PipelineConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("expected 'key = value'", line_no);
    try {
      set_config_value(base, detail::trim(std::string_view(line).substr(0, eq)),
                       detail::trim(std::string_view(line).substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), line_no);
    }
  }
  return base;
}

inline PipelineConfig load_config(const std::string& path, PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), std::move(base));
}

// FNV-1a over the canonical config text, as 16 hex digits.
inline std::string config_hash(const PipelineConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_config_text(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Report

struct IdentityCluster {
  int cluster_id = 0;
  std::vector<std::string> members;  // frame-level face ids
  ClusterAttributes attributes;
};

struct AlbumReport {
  std::vector<IdentityCluster> clusters;
  std::vector<std::string> unassigned;
  std::string config_hash;
  std::size_t num_faces = 0;
  std::size_t num_gallery_records = 0;
  std::size_t num_tracks = 0;
  std::size_t num_skipped_frames = 0;
  std::optional<std::map<std::string, double>> timings_ms;

  // Frame-level partition over every input face.
  Partition to_partition() const {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& c : clusters) {
      for (const auto& m : c.members) {
        ids.push_back(m);
        labels.push_back(c.cluster_id);
      }
    }
    for (const auto& u : unassigned) {
      ids.push_back(u);
      labels.push_back(Partition::kUnassigned);
    }
    return Partition(std::move(ids), std::move(labels));
  }

  nlohmann::ordered_json to_json() const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["clusters"] = ordered_json::array();
    for (const auto& c : clusters) {
      const auto& a = c.attributes;
      ordered_json attrs;
      attrs["gender"] = a.gender ? ordered_json(std::string(to_string(*a.gender))) : ordered_json(nullptr);
      attrs["gender_confidence"] = a.gender_confidence ? ordered_json(*a.gender_confidence) : ordered_json(nullptr);
      attrs["age_years"] = a.age_years ? ordered_json(*a.age_years) : ordered_json(nullptr);
      attrs["born_year"] = a.born_year ? ordered_json(*a.born_year) : ordered_json(nullptr);
      attrs["first_date"] = a.first_date.to_string();
      attrs["last_date"] = a.last_date.to_string();
      attrs["span_days"] = a.span_days;
      attrs["member_count"] = a.member_count;
      ordered_json entry;
      entry["cluster_id"] = c.cluster_id;
      entry["members"] = c.members;
      entry["attributes"] = std::move(attrs);
      j["clusters"].push_back(std::move(entry));
    }
    j["unassigned"] = unassigned;
    ordered_json meta;
    meta["config_hash"] = config_hash;
    meta["num_faces"] = num_faces;
    meta["num_gallery_records"] = num_gallery_records;
    meta["num_tracks"] = num_tracks;
    meta["num_skipped_frames"] = num_skipped_frames;
    meta["num_clusters"] = clusters.size();
    meta["num_unassigned"] = unassigned.size();
    if (timings_ms) meta["timings_ms"] = *timings_ms;
    j["metadata"] = std::move(meta);
    return j;
  }
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("stage '") + name + "': " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace detail

struct RunOptions {
  bool record_timings = false;
};

// Fused attributes per cluster of a gallery partition. Member counts are
// frame-level when `weights` gives the size of collapsed track records.
inline std::vector<ClusterAttributes> tag_clusters(const Partition& partition, const Dataset& gallery,
                                                   const FusionConfig& fusion,
                                                   const std::unordered_map<std::string, std::size_t>& weights = {}) {
  std::vector<ClusterAttributes> out;
  for (const auto& members : partition.clusters()) {
    std::vector<FaceObservation> obs;
    std::size_t count = 0;
    for (std::size_t m : members) {
      const auto& id = partition.face_ids()[m];
      obs.push_back(gallery.at(id));
      auto it = weights.find(id);
      count += it == weights.end() ? 1 : it->second;
    }
    out.push_back(fuse_cluster(obs, fusion, count));
  }
  return out;
}

inline AlbumReport run_pipeline(const Dataset& dataset, const PipelineConfig& config, const RunOptions& run = {}) {
  config.validate();
  using Clock = std::chrono::steady_clock;
  std::map<std::string, double> timings;
  auto timed = [&](const char* name, auto&& body) {
    const auto t0 = Clock::now();
    auto result = detail::stage(name, body);
    timings[name] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    return result;
  };

  AlbumReport report;
  report.config_hash = config_hash(config);
  report.num_faces = dataset.size();

  // Split photos from clips; clips in media_id order.
  std::vector<FaceObservation> photos;
  std::map<std::string, std::vector<FaceObservation>> clips;
  for (const auto& o : dataset) {
    if (o.media_kind == MediaKind::photo) photos.push_back(o);
    else clips[o.media_id].push_back(o);
  }

  std::vector<std::string> skipped;
  const auto tracks = timed("video", [&] {
    std::vector<TrackRecord> all;
    for (const auto& [media_id, frames] : clips) {
      const auto kept = sample_frames(frames, config.frame_stride);
      for (const auto& f : frames) {
        if (f.frame_index % config.frame_stride != 0) skipped.push_back(f.face_id);
      }
      if (kept.empty()) continue;
      auto clip_tracks = cluster_clip(kept, config.effective_clip_threshold());
      all.insert(all.end(), std::make_move_iterator(clip_tracks.begin()), std::make_move_iterator(clip_tracks.end()));
    }
    return all;
  });
  report.num_tracks = tracks.size();
  report.num_skipped_frames = skipped.size();

  const Dataset gallery = timed("gallery", [&] { return merge_into_gallery(photos, tracks); });
  report.num_gallery_records = gallery.size();

  std::unordered_map<std::string, std::vector<std::string>> expansion;
  std::unordered_map<std::string, std::size_t> weights;
  for (const auto& t : tracks) {
    expansion[t.face_id] = t.member_ids;
    weights[t.face_id] = t.frame_count();
  }

  Partition partition;
  std::optional<CondensedDistanceMatrix> distances;
  if (!gallery.empty()) {
    BornYearMap born_years;
    if (config.born_year_weight > 0.0) {
      timed("born_year", [&] {
        for (const auto& o : gallery) {
          if (!o.age_posterior) throw ValidationError("born-year feature needs an age posterior for '" + o.face_id + "'");
          born_years[o.face_id] = static_cast<double>(o.created_at.year()) -
                                  expected_age(*o.age_posterior, config.fusion.age.top_l, config.fusion.age_index_offset);
        }
        return 0;
      });
    }
    partition = timed("cluster", [&] {
      if (gallery.size() == 1) return Partition(gallery.face_ids(), {0});
      if (config.method == ClusterMethod::rank_order) return rank_order_cluster(gallery, config.rank_order);
      distances = pairwise_distances(gallery, config.born_year_weight, born_years);
      return cut(linkage(*distances, config.linkage), config.cut_threshold, gallery.face_ids());
    });
    partition = timed("refine", [&] {
      Partition p = partition;
      if (config.refine.separate_same_photo) {
        p = distances ? split_same_photo(p, gallery, config.cut_threshold, config.refine.same_photo_penalty, *distances)
                      : split_same_photo(p, gallery, config.cut_threshold, config.refine.same_photo_penalty);
      }
      if (config.refine.min_cluster_size > 1) p = filter_small(p, config.refine.min_cluster_size, weights);
      if (config.refine.min_span_days > 0) p = filter_date_span(p, gallery, config.refine.min_span_days);
      return p;
    });
  }

  const auto attributes = timed("fuse", [&] { return tag_clusters(partition, gallery, config.fusion, weights); });

  timed("report", [&] {
    std::unordered_map<std::string, std::size_t> order;
    for (std::size_t i = 0; i < dataset.size(); ++i) order[dataset[i].face_id] = i;
    auto by_input_order = [&](std::vector<std::string>& ids) {
      std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) { return order[a] < order[b]; });
    };
    auto expand = [&](const std::string& id, std::vector<std::string>& into) {
      auto it = expansion.find(id);
      if (it == expansion.end()) into.push_back(id);
      else into.insert(into.end(), it->second.begin(), it->second.end());
    };
    const auto groups = partition.clusters();
    for (std::size_t k = 0; k < groups.size(); ++k) {
      IdentityCluster c;
      c.cluster_id = static_cast<int>(k);
      for (std::size_t m : groups[k]) expand(partition.face_ids()[m], c.members);
      by_input_order(c.members);
      c.attributes = attributes[k];
      report.clusters.push_back(std::move(c));
    }
    for (std::size_t m : partition.unassigned()) expand(partition.face_ids()[m], report.unassigned);
    report.unassigned.insert(report.unassigned.end(), skipped.begin(), skipped.end());
    by_input_order(report.unassigned);
    return 0;
  });

  if (run.record_timings) report.timings_ms = timings;
  return report;
}

inline AlbumReport run_pipeline(const std::string& dataset_path, const PipelineConfig& config,
                                const RunOptions& run = {}) {
  const Dataset dataset = detail::stage("load", [&] { return load_dataset(dataset_path); });
  return run_pipeline(dataset, config, run);
}

}  // namespace album
