#pragma once

// Held-out threshold selection: pick the flat-cut threshold that best
// recovers known identities on a small labeled subset of an album.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "album/face_model.hpp"
#include "album/hac.hpp"
#include "album/metrics.hpp"

namespace album {

struct LabeledSubset {
  Dataset dataset;
  Partition truth;
};

// Uniform random subset holding round(fraction * n) faces (at least 2).
inline LabeledSubset sample_subset(const Dataset& dataset, const Partition& truth, double fraction,
                                   std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("fraction must lie in (0, 1]");
  const std::size_t n = dataset.size();
  std::size_t take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  take = std::clamp<std::size_t>(take, std::min<std::size_t>(2, n), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(take);
  std::sort(order.begin(), order.end());

  std::vector<FaceObservation> faces;
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (std::size_t i : order) {
    faces.push_back(dataset[i]);
    ids.push_back(dataset[i].face_id);
    labels.push_back(truth.label_of(dataset[i].face_id));
  }
  return {Dataset(std::move(faces)), Partition::from_assignment(std::move(ids), labels)};
}

inline std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0)) throw ValidationError("invalid threshold grid");
  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double t = lo + step * static_cast<double>(k);
    if (t > hi + 1e-12) break;
    grid.push_back(t);
  }
  return grid;
}

struct TuneResult {
  double threshold;
  double score;  // BCubed F on the subset at that threshold
};

// Scores every grid threshold by BCubed F on the labeled subset. Several
// thresholds usually tie at the optimum; the middle of the longest run of
// optimal grid points is returned, which keeps the choice away from both
// edges of the plateau.
inline TuneResult tune_cut_threshold(const Dataset& subset, const Partition& truth, LinkageKind kind,
                                     std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("empty threshold grid");
  if (subset.size() < 2) return {grid[grid.size() / 2], 1.0};
  const auto dendrogram = linkage(pairwise_distances(subset), kind);
  std::vector<double> scores;
  scores.reserve(grid.size());
  for (double t : grid) scores.push_back(bcubed(cut(dendrogram, t, subset.face_ids()), truth).f);
  const double best = *std::max_element(scores.begin(), scores.end());
  std::size_t run_start = 0, run_len = 0, best_start = 0, best_len = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k] >= best - 1e-12) {
      if (run_len == 0) run_start = k;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_start = run_start;
      }
    } else {
      run_len = 0;
    }
  }
  return {grid[best_start + (best_len - 1) / 2], best};
}

}  // namespace album
