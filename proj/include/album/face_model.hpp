#pragma once

// Domain types shared by every stage of the album engine: face records,
// datasets, flat partitions, and their JSON serialization.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace album {

// Raised for malformed input data or arguments outside an operation's contract.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
  ValidationError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  // 1-based input line, when the error is tied to one.
  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::size_t kAgeClasses = 100;
inline constexpr std::size_t kGenderClasses = 2;

// Tolerance within which serialized embeddings/posteriors are silently rescaled.
inline constexpr double kRenormalizeTolerance = 1e-3;

enum class MediaKind { photo, video };

inline std::string_view to_string(MediaKind kind) {
  return kind == MediaKind::photo ? "photo" : "video";
}

inline MediaKind parse_media_kind(std::string_view text) {
  if (text == "photo") return MediaKind::photo;
  if (text == "video") return MediaKind::video;
  throw ValidationError("unknown media_kind '" + std::string(text) + "'");
}

// Calendar date with day precision.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

  static Date from_ymd(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw ValidationError("invalid calendar date");
    return Date(std::chrono::sys_days{ymd});
  }

  // Strict YYYY-MM-DD.
  static Date parse(std::string_view text) {
    auto digits = [&](std::size_t from, std::size_t count) {
      int value = 0;
      for (std::size_t i = from; i < from + count; ++i) {
        if (text[i] < '0' || text[i] > '9') throw ValidationError("bad date '" + std::string(text) + "'");
        value = value * 10 + (text[i] - '0');
      }
      return value;
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
      throw ValidationError("bad date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const int y = digits(0, 4);
    const int m = digits(5, 2);
    const int d = digits(8, 2);
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ValidationError("bad date '" + std::string(text) + "'");
    return Date(std::chrono::sys_days{ymd});
  }

  std::string to_string() const {
    const std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  int year() const { return static_cast<int>(std::chrono::year_month_day{days_}.year()); }
  std::chrono::sys_days days() const { return days_; }

  Date plus_days(long n) const { return Date(days_ + std::chrono::days{n}); }

  friend long operator-(const Date& a, const Date& b) {
    return static_cast<long>((a.days_ - b.days_).count());
  }
  friend auto operator<=>(const Date&, const Date&) = default;
  friend bool operator==(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

struct FaceObservation {
  std::string face_id;
  std::string media_id;
  MediaKind media_kind = MediaKind::photo;
  int frame_index = 0;
  Date created_at;
  std::vector<double> embedding;
  std::optional<std::vector<double>> age_posterior;
  std::optional<std::vector<double>> gender_posterior;
  std::optional<std::array<int, 4>> bbox;

  bool operator==(const FaceObservation&) const = default;
};

namespace detail {

inline double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Rescales a probability vector whose sum is within tolerance of 1.
inline void check_posterior(std::vector<double>& p, std::size_t expected, const char* name) {
  if (p.size() != expected) {
    throw ValidationError(std::string(name) + " must have " + std::to_string(expected) +
                          " entries, got " + std::to_string(p.size()));
  }
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw ValidationError(std::string(name) + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    throw ValidationError(std::string(name) + " does not sum to 1 (sum " + std::to_string(sum) + ")");
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    for (double& x : p) x /= sum;
  }
}

}  // namespace detail

// Checks one record against the per-face invariants, renormalizing within tolerance.
inline FaceObservation validated(FaceObservation obs) {
  if (obs.face_id.empty()) throw ValidationError("empty face_id");
  if (obs.frame_index < 0) throw ValidationError("negative frame_index for '" + obs.face_id + "'");
  if (obs.embedding.empty()) throw ValidationError("empty embedding for '" + obs.face_id + "'");
  for (double x : obs.embedding) {
    if (!std::isfinite(x)) throw ValidationError("non-finite embedding value for '" + obs.face_id + "'");
  }
  const double norm = detail::l2_norm(obs.embedding);
  if (std::abs(norm - 1.0) > kRenormalizeTolerance) {
    throw ValidationError("embedding not normalized for '" + obs.face_id + "' (norm " +
                          std::to_string(norm) + ")");
  }
  if (std::abs(norm - 1.0) > 1e-12) {
    for (double& x : obs.embedding) x /= norm;
  }
  if (obs.age_posterior) detail::check_posterior(*obs.age_posterior, kAgeClasses, "age_probs");
  if (obs.gender_posterior) detail::check_posterior(*obs.gender_posterior, kGenderClasses, "gender_probs");
  return obs;
}

// Ordered, validated collection of face records with a common embedding dimension.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<FaceObservation> observations) {
    observations_.reserve(observations.size());
    for (auto& obs : observations) push(std::move(obs));
  }

  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  // Embedding dimension; nullopt for an empty dataset.
  std::optional<std::size_t> dim() const { return dim_; }

  const FaceObservation& operator[](std::size_t i) const { return observations_[i]; }
  const std::vector<FaceObservation>& observations() const { return observations_; }
  auto begin() const { return observations_.begin(); }
  auto end() const { return observations_.end(); }

  std::optional<std::size_t> find(const std::string& face_id) const {
    auto it = index_.find(face_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& face_id) const {
    auto i = find(face_id);
    if (!i) throw ValidationError("unknown face_id '" + face_id + "'");
    return *i;
  }

  const FaceObservation& at(const std::string& face_id) const { return observations_[index_of(face_id)]; }

  std::vector<std::string> face_ids() const {
    std::vector<std::string> ids;
    ids.reserve(size());
    for (const auto& o : observations_) ids.push_back(o.face_id);
    return ids;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.observations_ == b.observations_;
  }

 private:
  void push(FaceObservation obs) {
    obs = validated(std::move(obs));
    if (dim_ && obs.embedding.size() != *dim_) {
      throw ValidationError("inconsistent dimension for '" + obs.face_id + "': expected " +
                            std::to_string(*dim_) + ", got " + std::to_string(obs.embedding.size()));
    }
    if (!index_.emplace(obs.face_id, observations_.size()).second) {
      throw ValidationError("duplicate face_id '" + obs.face_id + "'");
    }
    dim_ = obs.embedding.size();
    observations_.push_back(std::move(obs));
  }

  std::vector<FaceObservation> observations_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::size_t> dim_;
};

// Flat assignment of faces to clusters. Label -1 marks an unassigned face;
// assigned labels are exactly {0, ..., num_clusters-1}.
class Partition {
 public:
  static constexpr int kUnassigned = -1;

  Partition() = default;

  Partition(std::vector<std::string> face_ids, std::vector<int> labels)
      : face_ids_(std::move(face_ids)), labels_(std::move(labels)) {
    if (face_ids_.size() != labels_.size()) throw ValidationError("face_ids and labels differ in length");
    int max_label = -1;
    for (int l : labels_) {
      if (l < kUnassigned) throw ValidationError("label below -1");
      max_label = std::max(max_label, l);
    }
    std::vector<char> used(static_cast<std::size_t>(max_label + 1), 0);
    for (int l : labels_) {
      if (l >= 0) used[static_cast<std::size_t>(l)] = 1;
    }
    if (std::find(used.begin(), used.end(), 0) != used.end()) {
      throw ValidationError("cluster labels are not contiguous from 0");
    }
    num_clusters_ = used.size();
    index_.reserve(face_ids_.size());
    for (std::size_t i = 0; i < face_ids_.size(); ++i) {
      if (!index_.emplace(face_ids_[i], i).second) {
        throw ValidationError("duplicate face_id '" + face_ids_[i] + "' in partition");
      }
    }
  }

  // Relabels arbitrary integer labels to contiguous ids in order of first
  // appearance; negative labels become unassigned.
  static Partition from_assignment(std::vector<std::string> face_ids, const std::vector<int>& raw) {
    std::unordered_map<int, int> remap;
    std::vector<int> labels;
    labels.reserve(raw.size());
    for (int l : raw) {
      if (l < 0) {
        labels.push_back(kUnassigned);
        continue;
      }
      auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
      labels.push_back(it->second);
    }
    return Partition(std::move(face_ids), std::move(labels));
  }

  std::size_t size() const { return face_ids_.size(); }
  std::size_t num_clusters() const { return num_clusters_; }
  const std::vector<std::string>& face_ids() const { return face_ids_; }
  const std::vector<int>& labels() const { return labels_; }

  bool contains(const std::string& face_id) const { return index_.count(face_id) != 0; }

  int label_of(const std::string& face_id) const {
    auto it = index_.find(face_id);
    if (it == index_.end()) throw ValidationError("face_id '" + face_id + "' not in partition");
    return labels_[it->second];
  }

  // Member positions (into face_ids()) for each cluster label.
  std::vector<std::vector<std::size_t>> clusters() const {
    std::vector<std::vector<std::size_t>> out(num_clusters_);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] >= 0) out[static_cast<std::size_t>(labels_[i])].push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> unassigned() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] < 0) out.push_back(i);
    }
    return out;
  }

  // Map equality: same faces with the same labels, regardless of order.
  friend bool operator==(const Partition& a, const Partition& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto it = b.index_.find(a.face_ids_[i]);
      if (it == b.index_.end() || b.labels_[it->second] != a.labels_[i]) return false;
    }
    return true;
  }

 private:
  std::vector<std::string> face_ids_;
  std::vector<int> labels_;
  std::size_t num_clusters_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

// True when both partitions group the same faces identically up to relabeling
// (unassigned faces must coincide).
inline bool same_grouping(const Partition& a, const Partition& b) {
  if (a.size() != b.size() || a.num_clusters() != b.num_clusters()) return false;
  std::vector<int> forward(a.num_clusters(), -2);
  std::vector<int> backward(b.num_clusters(), -2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string& id = a.face_ids()[i];
    if (!b.contains(id)) return false;
    const int la = a.labels()[i];
    const int lb = b.label_of(id);
    if ((la < 0) != (lb < 0)) return false;
    if (la < 0) continue;
    auto& f = forward[static_cast<std::size_t>(la)];
    auto& g = backward[static_cast<std::size_t>(lb)];
    if (f == -2 && g == -2) {
      f = lb;
      g = la;
    } else if (f != lb || g != la) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON serialization

inline nlohmann::ordered_json to_json(const FaceObservation& o) {
  nlohmann::ordered_json j;
  j["face_id"] = o.face_id;
  j["media_id"] = o.media_id;
  j["media_kind"] = std::string(to_string(o.media_kind));
  j["frame_index"] = o.frame_index;
  j["created_at"] = o.created_at.to_string();
  j["embedding"] = o.embedding;
  j["age_probs"] = o.age_posterior ? nlohmann::ordered_json(*o.age_posterior) : nlohmann::ordered_json(nullptr);
  j["gender_probs"] =
      o.gender_posterior ? nlohmann::ordered_json(*o.gender_posterior) : nlohmann::ordered_json(nullptr);
  j["bbox"] = o.bbox ? nlohmann::ordered_json(*o.bbox) : nlohmann::ordered_json(nullptr);
  return j;
}

namespace detail {

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> nullable(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline FaceObservation observation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  FaceObservation o;
  o.face_id = detail::required<std::string>(j, "face_id");
  o.media_id = detail::required<std::string>(j, "media_id");
  o.media_kind = parse_media_kind(detail::required<std::string>(j, "media_kind"));
  o.frame_index = detail::required<int>(j, "frame_index");
  o.created_at = Date::parse(detail::required<std::string>(j, "created_at"));
  o.embedding = detail::required<std::vector<double>>(j, "embedding");
  o.age_posterior = detail::nullable<std::vector<double>>(j, "age_probs");
  o.gender_posterior = detail::nullable<std::vector<double>>(j, "gender_probs");
  o.bbox = detail::nullable<std::array<int, 4>>(j, "bbox");
  return o;
}

// Parses JSONL, one face per non-blank line. Errors carry the 1-based line.
inline Dataset read_dataset(std::istream& in) {
  std::vector<FaceObservation> pending;
  std::string text;
  std::size_t line_no = 0;
  std::unordered_set<std::string> seen;
  std::optional<std::size_t> dim;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
      }
      FaceObservation obs = validated(observation_from_json(j));
      if (dim && obs.embedding.size() != *dim) {
        throw ValidationError("inconsistent dimension: expected " + std::to_string(*dim) + ", got " +
                              std::to_string(obs.embedding.size()));
      }
      if (!seen.insert(obs.face_id).second) throw ValidationError("duplicate face_id '" + obs.face_id + "'");
      dim = obs.embedding.size();
      pending.push_back(std::move(obs));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), line_no);
    }
  }
  return Dataset(std::move(pending));
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

inline void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& o : dataset) out << to_json(o).dump() << '\n';
}

inline void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset '" + path + "'");
  write_dataset(dataset, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline nlohmann::ordered_json to_json(const Partition& p) {
  nlohmann::ordered_json j;
  j["num_clusters"] = p.num_clusters();
  j["labels"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < p.size(); ++i) j["labels"][p.face_ids()[i]] = p.labels()[i];
  return j;
}

inline Partition partition_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_object()) {
    throw ValidationError("partition must be an object with a 'labels' object");
  }
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& [id, label] : j["labels"].items()) {
    if (!label.is_number_integer()) throw ValidationError("label for '" + id + "' is not an integer");
    ids.push_back(id);
    labels.push_back(label.get<int>());
  }
  Partition p(std::move(ids), std::move(labels));
  if (j.contains("num_clusters")) {
    if (!j["num_clusters"].is_number_integer() ||
        j["num_clusters"].get<long long>() != static_cast<long long>(p.num_clusters())) {
      throw ValidationError("num_clusters does not match labels");
    }
  }
  return p;
}

inline void save_partition(const Partition& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write partition '" + path + "'");
  out << to_json(p).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Partition load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open partition '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed partition JSON: ") + e.what());
  }
  return partition_from_json(j);
}

}  // namespace album
