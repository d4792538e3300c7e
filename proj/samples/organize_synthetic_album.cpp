// Builds a small synthetic album with photos and video clips, organizes it
// into identities and prints one line per identity plus the agreement with
// the generator's ground truth.

#include <cstdio>

#include "album/album.hpp"

int main() {
  album::SynthOptions options;
  options.num_subjects = 8;
  options.faces_per_subject = 12;
  options.clips_per_subject = 1;
  options.frames_per_clip = 9;
  options.dim = 64;
  options.seed = 2024;
  const auto synthetic = album::generate_synthetic_album(options);

  // Tune the cut on 10% of the labeled faces, then run the full pipeline.
  const auto subset = album::sample_subset(synthetic.dataset, synthetic.truth, 0.1, options.seed);
  const auto grid = album::threshold_grid(0.05, 1.5, 0.05);
  const auto tuned = album::tune_cut_threshold(subset.dataset, subset.truth, album::LinkageKind::average, grid);

  album::PipelineConfig config;
  config.cut_threshold = tuned.threshold;
  const auto report = album::run_pipeline(synthetic.dataset, config);

  std::printf("threshold %.2f (subset BCubed F %.3f), %zu faces, %zu tracks\n", tuned.threshold, tuned.score,
              report.num_faces, report.num_tracks);
  for (const auto& c : report.clusters) {
    const auto& a = c.attributes;
    std::printf("identity %2d: %3zu faces, %-6s born %s, seen %s .. %s\n", c.cluster_id, a.member_count,
                a.gender ? std::string(album::to_string(*a.gender)).c_str() : "?",
                a.born_year ? std::to_string(*a.born_year).c_str() : "?", a.first_date.to_string().c_str(),
                a.last_date.to_string().c_str());
  }
  const auto eval = album::evaluate(report.to_partition(), synthetic.truth);
  std::printf("unassigned %zu, ARI %.4f, BCubed F %.4f\n", report.unassigned.size(), eval.ari, eval.bcubed_f);
  return 0;
}
