#pragma once

// Fusion of per-face gender/age posteriors into one decision per identity,
// and born-year estimation from fused ages and media dates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "album/face_model.hpp"

namespace album {

// Floor applied to probabilities before taking logs in the product rule.
inline constexpr double kProbabilityFloor = 1e-7;

struct ClassDecision {
  std::size_t index;
  double score;
};

namespace detail {

inline void check_posteriors(std::span<const std::vector<double>> posteriors) {
  if (posteriors.empty()) throw ValidationError("fusion needs at least one posterior");
  const std::size_t classes = posteriors.front().size();
  if (classes == 0) throw ValidationError("posterior has no classes");
  for (const auto& p : posteriors) {
    if (p.size() != classes) throw ValidationError("posteriors differ in length");
  }
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::vector<double> log_sums(std::span<const std::vector<double>> posteriors) {
  std::vector<double> sums(posteriors.front().size(), 0.0);
  for (const auto& p : posteriors) {
    for (std::size_t n = 0; n < p.size(); ++n) sums[n] += std::log(std::max(p[n], kProbabilityFloor));
  }
  return sums;
}

}  // namespace detail

// Product rule: argmax_n prod_m p_n(X_m), evaluated as the sum of floored
// logs. Score is the winner's share after renormalizing the products.
inline ClassDecision fuse_class_product(std::span<const std::vector<double>> posteriors) {
  detail::check_posteriors(posteriors);
  const auto sums = detail::log_sums(posteriors);
  const std::size_t winner = detail::argmax(sums);
  double total = 0.0;
  for (double s : sums) total += std::exp(s - sums[winner]);
  return {winner, 1.0 / total};
}

// Each posterior votes for its argmax; ties go to the lower class index.
inline ClassDecision fuse_class_voting(std::span<const std::vector<double>> posteriors) {
  detail::check_posteriors(posteriors);
  std::vector<std::size_t> votes(posteriors.front().size(), 0);
  for (const auto& p : posteriors) ++votes[detail::argmax(p)];
  const std::size_t winner =
      static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  return {winner, static_cast<double>(votes[winner]) / static_cast<double>(posteriors.size())};
}

// Probability-weighted mean age over the L most probable classes, with class
// index a meaning age (a + index_offset) years. Boundary ties keep the lower index.
inline double expected_age(std::span<const double> posterior, std::size_t top_l, double index_offset = 0.0) {
  if (top_l < 1 || top_l > posterior.size()) {
    throw ValidationError("top-L must lie in [1, " + std::to_string(posterior.size()) + "]");
  }
  std::vector<std::size_t> order(posterior.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_l), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (posterior[a] != posterior[b]) return posterior[a] > posterior[b];
                      return a < b;
                    });
  // Extended precision keeps short sums such as 30*0.5 + 31*0.3 + 32*0.2 at
  // the correctly rounded result.
  long double weighted = 0.0L, mass = 0.0L;
  for (std::size_t l = 0; l < top_l; ++l) {
    const std::size_t a = order[l];
    weighted += (static_cast<long double>(a) + index_offset) * static_cast<long double>(posterior[a]);
    mass += posterior[a];
  }
  if (mass == 0.0L) {
    // All selected classes have zero probability: fall back to their plain mean.
    for (std::size_t l = 0; l < top_l; ++l) weighted += static_cast<long double>(order[l]) + index_offset;
    return static_cast<double>(weighted / static_cast<long double>(top_l));
  }
  return static_cast<double>(weighted / mass);
}

enum class FusionKind { simple_voting, product_rule, expected_value };

struct FusionStrategy {
  FusionKind kind = FusionKind::product_rule;
  std::size_t top_l = 3;  // used by expected_value only

  static FusionStrategy voting() { return {FusionKind::simple_voting, 3}; }
  static FusionStrategy product() { return {FusionKind::product_rule, 3}; }
  static FusionStrategy expected(std::size_t l) { return {FusionKind::expected_value, l}; }

  bool operator==(const FusionStrategy&) const = default;
};

inline std::string_view to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::simple_voting: return "vote";
    case FusionKind::product_rule: return "product";
    case FusionKind::expected_value: return "expected";
  }
  return "?";
}

inline FusionKind parse_fusion_kind(std::string_view text) {
  if (text == "vote") return FusionKind::simple_voting;
  if (text == "product") return FusionKind::product_rule;
  if (text == "expected") return FusionKind::expected_value;
  throw ValidationError("unknown fusion strategy '" + std::string(text) + "'");
}

namespace detail {

inline std::vector<std::vector<double>> age_posteriors(std::span<const FaceObservation> observations) {
  std::vector<std::vector<double>> out;
  for (const auto& o : observations) {
    if (o.age_posterior) out.push_back(*o.age_posterior);
  }
  if (out.empty()) throw ValidationError("no observation carries an age posterior");
  return out;
}

}  // namespace detail

// Fused age in years over every observation that has an age posterior.
inline double fuse_age(std::span<const FaceObservation> observations, const FusionStrategy& strategy,
                       double index_offset = 0.0) {
  const auto posteriors = detail::age_posteriors(observations);
  switch (strategy.kind) {
    case FusionKind::simple_voting:
      return static_cast<double>(fuse_class_voting(posteriors).index) + index_offset;
    case FusionKind::product_rule:
      return static_cast<double>(fuse_class_product(posteriors).index) + index_offset;
    case FusionKind::expected_value: {
      double sum = 0.0;
      for (const auto& p : posteriors) sum += expected_age(p, strategy.top_l, index_offset);
      return sum / static_cast<double>(posteriors.size());
    }
  }
  return 0.0;
}

// Gender decision over faces with a gender posterior; nullopt if none has one.
inline std::optional<ClassDecision> fuse_gender(std::span<const FaceObservation> observations, FusionKind kind) {
  std::vector<std::vector<double>> posteriors;
  for (const auto& o : observations) {
    if (o.gender_posterior) posteriors.push_back(*o.gender_posterior);
  }
  if (posteriors.empty()) return std::nullopt;
  if (kind == FusionKind::simple_voting) return fuse_class_voting(posteriors);
  if (kind == FusionKind::product_rule) return fuse_class_product(posteriors);
  throw ValidationError("gender fusion must be vote or product");
}

// Round half away from zero of mean(year(created_at) - age) over observations.
inline int fuse_born_year(std::span<const FaceObservation> observations,
                          const std::unordered_map<std::string, double>& fused_age_per_obs) {
  if (observations.empty()) throw ValidationError("fuse_born_year needs at least one observation");
  double sum = 0.0;
  for (const auto& o : observations) {
    auto it = fused_age_per_obs.find(o.face_id);
    if (it == fused_age_per_obs.end()) throw ValidationError("no fused age for '" + o.face_id + "'");
    sum += static_cast<double>(o.created_at.year()) - it->second;
  }
  return static_cast<int>(std::round(sum / static_cast<double>(observations.size())));
}

enum class Gender { female = 0, male = 1 };

inline std::string_view to_string(Gender g) { return g == Gender::female ? "female" : "male"; }

struct ClusterAttributes {
  std::optional<Gender> gender;
  std::optional<double> gender_confidence;
  std::optional<double> age_years;
  std::optional<int> born_year;
  Date first_date;
  Date last_date;
  long span_days = 0;
  std::size_t member_count = 0;
};

struct FusionConfig {
  FusionKind gender = FusionKind::product_rule;
  FusionStrategy age = FusionStrategy::expected(3);
  double age_index_offset = 0.0;

  bool operator==(const FusionConfig&) const = default;
};

// Attributes for one cluster. Per-face ages (for the born year) apply the age
// strategy to each face alone; faces without an age posterior are skipped.
inline ClusterAttributes fuse_cluster(std::span<const FaceObservation> members, const FusionConfig& config,
                                      std::size_t member_count) {
  if (members.empty()) throw ValidationError("cannot fuse an empty cluster");
  ClusterAttributes attrs;
  attrs.member_count = member_count;
  attrs.first_date = attrs.last_date = members.front().created_at;
  for (const auto& m : members) {
    attrs.first_date = std::min(attrs.first_date, m.created_at);
    attrs.last_date = std::max(attrs.last_date, m.created_at);
  }
  attrs.span_days = attrs.last_date - attrs.first_date;

  if (auto g = fuse_gender(members, config.gender)) {
    attrs.gender = g->index == 0 ? Gender::female : Gender::male;
    attrs.gender_confidence = g->score;
  }

  std::vector<FaceObservation> aged;
  std::unordered_map<std::string, double> per_face;
  for (const auto& m : members) {
    if (!m.age_posterior) continue;
    aged.push_back(m);
    per_face[m.face_id] = fuse_age(std::span<const FaceObservation>(&m, 1), config.age, config.age_index_offset);
  }
  if (!aged.empty()) {
    attrs.age_years = fuse_age(aged, config.age, config.age_index_offset);
    attrs.born_year = fuse_born_year(aged, per_face);
  }
  return attrs;
}

}  // namespace album
