#pragma once

// Synthetic labeled albums for tests, tuning and benchmarks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "album/face_model.hpp"

namespace album {

struct SynthOptions {
  std::size_t num_subjects = 20;
  std::size_t faces_per_subject = 10;
  std::size_t dim = 64;
  double noise_sigma = 0.05;
  std::uint64_t seed = 1;
  Date first_date = Date::from_ymd(2015, 1, 1);
  long date_span_days = 3 * 365;
  // Optional video clips per subject, each with frames_per_clip frames.
  std::size_t clips_per_subject = 0;
  std::size_t frames_per_clip = 10;
  // Spread of the peaked per-face age posterior, in years.
  double age_posterior_sigma = 2.5;
  // Probability mass given to the true gender.
  double gender_confidence = 0.85;
};

struct SubjectTruth {
  int born_year;
  int gender;  // 0 female, 1 male
};

struct SyntheticAlbum {
  Dataset dataset;
  Partition truth;
  std::vector<SubjectTruth> subjects;
  std::unordered_map<std::string, double> true_ages;  // per face, in years
};

namespace detail {

inline std::vector<double> age_posterior_around(double age, double sigma) {
  std::vector<double> p(kAgeClasses);
  double total = 0.0;
  for (std::size_t a = 0; a < kAgeClasses; ++a) {
    const double z = (static_cast<double>(a) - age) / sigma;
    p[a] = std::exp(-0.5 * z * z);
    total += p[a];
  }
  for (double& v : p) v /= total;
  return p;
}

inline void normalize_nonnegative(std::vector<double>& v) {
  double norm = 0.0;
  for (double& x : v) {
    x = std::max(0.0, x);
    norm += x * x;
  }
  if (norm == 0.0) {
    v.front() = 1.0;
    return;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}

}  // namespace detail

// Subjects are random nonnegative unit centroids; each face is its centroid
// plus Gaussian noise, clipped at zero and renormalized. Deterministic per seed.
inline SyntheticAlbum generate_synthetic_album(const SynthOptions& options) {
  if (options.num_subjects == 0 || options.faces_per_subject == 0 || options.dim == 0) {
    throw ValidationError("synthetic album parameters must be positive");
  }
  if (options.noise_sigma < 0.0) throw ValidationError("noise_sigma must be nonnegative");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<long> day(0, std::max(0L, options.date_span_days));
  std::uniform_int_distribution<int> born(1950, 2012);
  std::bernoulli_distribution coin(0.5);

  SyntheticAlbum album;
  std::vector<FaceObservation> faces;
  std::vector<std::string> ids;
  std::vector<int> labels;

  auto age_at = [](int born_year, const Date& d) {
    return std::clamp(static_cast<double>(d.year() - born_year), 0.0, static_cast<double>(kAgeClasses - 1));
  };
  auto render = [&](std::size_t s, const std::vector<double>& centroid, FaceObservation& face) {
    face.embedding = centroid;
    if (options.noise_sigma > 0.0) {
      for (double& x : face.embedding) x += options.noise_sigma * gauss(rng);
      detail::normalize_nonnegative(face.embedding);
    }
    const auto& truth = album.subjects[s];
    const double age = age_at(truth.born_year, face.created_at);
    face.age_posterior = detail::age_posterior_around(age, options.age_posterior_sigma);
    const double q = options.gender_confidence;
    face.gender_posterior = truth.gender == 1 ? std::vector<double>{1.0 - q, q} : std::vector<double>{q, 1.0 - q};
    album.true_ages[face.face_id] = age;
  };

  for (std::size_t s = 0; s < options.num_subjects; ++s) {
    std::vector<double> centroid(options.dim);
    for (double& x : centroid) x = std::abs(gauss(rng));
    detail::normalize_nonnegative(centroid);
    album.subjects.push_back({born(rng), coin(rng) ? 1 : 0});

    for (std::size_t f = 0; f < options.faces_per_subject; ++f) {
      FaceObservation face;
      face.face_id = "s" + std::to_string(s) + "_f" + std::to_string(f);
      face.media_id = "photo_s" + std::to_string(s) + "_" + std::to_string(f);
      face.media_kind = MediaKind::photo;
      face.created_at = options.first_date.plus_days(day(rng));
      render(s, centroid, face);
      ids.push_back(face.face_id);
      labels.push_back(static_cast<int>(s));
      faces.push_back(std::move(face));
    }
    for (std::size_t c = 0; c < options.clips_per_subject; ++c) {
      const Date clip_date = options.first_date.plus_days(day(rng));
      for (std::size_t k = 0; k < options.frames_per_clip; ++k) {
        FaceObservation face;
        face.face_id = "s" + std::to_string(s) + "_c" + std::to_string(c) + "_k" + std::to_string(k);
        face.media_id = "clip_s" + std::to_string(s) + "_" + std::to_string(c);
        face.media_kind = MediaKind::video;
        face.frame_index = static_cast<int>(k);
        face.created_at = clip_date;
        render(s, centroid, face);
        ids.push_back(face.face_id);
        labels.push_back(static_cast<int>(s));
        faces.push_back(std::move(face));
      }
    }
  }
  album.dataset = Dataset(std::move(faces));
  album.truth = Partition(std::move(ids), std::move(labels));
  return album;
}

inline SyntheticAlbum generate_synthetic_album(std::size_t num_subjects, std::size_t faces_per_subject,
                                               std::size_t dim, double noise_sigma, std::uint64_t seed) {
  SynthOptions options;
  options.num_subjects = num_subjects;
  options.faces_per_subject = faces_per_subject;
  options.dim = dim;
  options.noise_sigma = noise_sigma;
  options.seed = seed;
  return generate_synthetic_album(options);
}

}  // namespace album
