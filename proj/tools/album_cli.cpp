// album: command-line front end for the identity clustering pipeline.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "album/album.hpp"

namespace {

using nlohmann::ordered_json;

// Pipeline flags, each mapped onto a config key. Only flags given on the
// command line are applied, after the config file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add_to(CLI::App& app, std::initializer_list<const char*> keys) {
    app.add_option("--config", config_path, "key = value config file (CLI flags take precedence)");
    static const std::map<std::string, std::pair<const char*, const char*>> known = {
        {"method", {"--method", "hac | rank-order (default hac)"}},
        {"linkage", {"--linkage", "single | complete | average | weighted | median (default average)"}},
        {"cut_threshold", {"--threshold", "dendrogram cut threshold (default 0.9)"}},
        {"clip_threshold", {"--clip-threshold", "within-clip cut threshold (default: --threshold)"}},
        {"frame_stride", {"--frame-stride", "keep every n-th video frame (default 3)"}},
        {"rank_threshold", {"--rank-threshold", "rank-order distance threshold (default 1.6)"}},
        {"norm_dist_threshold", {"--norm-dist-threshold", "rank-order normalized distance threshold (default 1.0)"}},
        {"rank_knn", {"--rank-knn", "neighbors used by the rank-order normalizer (default 9)"}},
        {"separate_same_photo", {"--separate-same-photo", "true | false (default true)"}},
        {"min_cluster_size", {"--min-cluster-size", "smallest retained cluster (default 4)"}},
        {"min_span_days", {"--min-span-days", "smallest retained date span in days (default 0)"}},
        {"same_photo_penalty", {"--same-photo-penalty", "distance between faces of one photo (default 1e6)"}},
        {"gender_fusion", {"--gender-fusion", "vote | product (default product)"}},
        {"age_fusion", {"--age-fusion", "vote | product | expected (default expected)"}},
        {"top_l", {"--top-l", "age classes used by expected fusion (default 3)"}},
        {"age_index_offset", {"--age-index-offset", "years added to an age class index (default 0)"}},
        {"born_year_weight", {"--born-year-weight", "weight of the born-year feature (default 0)"}},
        {"unassigned", {"--unassigned", "exclude | singleton (default exclude)"}},
    };
    for (const char* key : keys) {
      const auto& [flag, help] = known.at(key);
      options.emplace_back(key, app.add_option(flag, values[key], help));
    }
  }

  album::PipelineConfig resolve() const {
    album::PipelineConfig config;
    if (!config_path.empty()) config = album::load_config(config_path);
    for (const auto& [key, option] : options) {
      if (option->count() > 0) album::set_config_value(config, key, values.at(key));
    }
    config.validate();
    return config;
  }
};

void write_json(const ordered_json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw album::IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw album::IoError("write to '" + path + "' failed");
}

ordered_json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw album::IoError("cannot open '" + path + "'");
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw album::ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::map<std::string, double> read_age_map(const std::string& path) {
  const auto j = read_json(path);
  if (!j.is_object()) throw album::ValidationError("'" + path + "' must map face_id to age");
  std::map<std::string, double> ages;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_number()) throw album::ValidationError("age of '" + id + "' is not a number");
    ages[id] = v.get<double>();
  }
  return ages;
}

// Frame-level partition for a dataset; faces the file does not mention are unassigned.
album::Partition partition_for(const album::Dataset& dataset, const album::Partition& given) {
  std::vector<std::string> ids = dataset.face_ids();
  std::vector<int> labels;
  labels.reserve(ids.size());
  for (const auto& id : ids) labels.push_back(given.contains(id) ? given.label_of(id) : album::Partition::kUnassigned);
  return album::Partition::from_assignment(std::move(ids), labels);
}

ordered_json tag_json(const album::Partition& partition, const album::Dataset& dataset,
                      const album::FusionConfig& fusion) {
  album::AlbumReport report;
  const auto attrs = album::tag_clusters(partition, dataset, fusion);
  const auto groups = partition.clusters();
  for (std::size_t k = 0; k < groups.size(); ++k) {
    album::IdentityCluster c;
    c.cluster_id = static_cast<int>(k);
    for (std::size_t m : groups[k]) c.members.push_back(partition.face_ids()[m]);
    c.attributes = attrs[k];
    report.clusters.push_back(std::move(c));
  }
  for (std::size_t m : partition.unassigned()) report.unassigned.push_back(partition.face_ids()[m]);
  auto j = report.to_json();
  j.erase("metadata");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identity clustering and attribute tagging for photo and video albums"};
  app.require_subcommand(1);

  std::string input, out, partition_path, partition_out;

  // run
  auto* run = app.add_subcommand("run", "Full pipeline: tracks, clustering, refinement, fusion, report");
  ConfigFlags run_flags;
  bool timings = false;
  run->add_option("--input,-i", input, "face records (JSONL)")->required();
  run->add_option("--out,-o", out, "report path (default stdout)");
  run->add_option("--partition-out", partition_out, "also write the frame-level partition");
  run->add_flag("--timings", timings, "record per-stage timings in the report");
  run_flags.add_to(*run, {"method", "linkage", "cut_threshold", "clip_threshold", "frame_stride", "rank_threshold",
                          "norm_dist_threshold", "rank_knn", "separate_same_photo", "min_cluster_size",
                          "min_span_days", "same_photo_penalty", "gender_fusion", "age_fusion", "top_l",
                          "age_index_offset", "born_year_weight"});

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Clustering only (tracks collapsed, no refinement)");
  ConfigFlags cluster_flags;
  cluster->add_option("--input,-i", input, "face records (JSONL)")->required();
  cluster->add_option("--out,-o", out, "partition path (default stdout)");
  cluster_flags.add_to(*cluster, {"method", "linkage", "cut_threshold", "clip_threshold", "frame_stride",
                                  "rank_threshold", "norm_dist_threshold", "rank_knn", "born_year_weight", "top_l",
                                  "age_index_offset"});

  // refine
  auto* refine = app.add_subcommand("refine", "Same-photo separation and cluster filters on a partition");
  ConfigFlags refine_flags;
  refine->add_option("--input,-i", input, "face records (JSONL)")->required();
  refine->add_option("--partition,-p", partition_path, "partition to refine")->required();
  refine->add_option("--out,-o", out, "partition path (default stdout)");
  refine_flags.add_to(*refine, {"cut_threshold", "separate_same_photo", "min_cluster_size", "min_span_days",
                                "same_photo_penalty"});

  // tag
  auto* tag = app.add_subcommand("tag", "Fuse gender, age and born year per cluster");
  ConfigFlags tag_flags;
  tag->add_option("--input,-i", input, "face records (JSONL)")->required();
  tag->add_option("--partition,-p", partition_path, "clusters to tag")->required();
  tag->add_option("--out,-o", out, "attributes path (default stdout)");
  tag_flags.add_to(*tag, {"gender_fusion", "age_fusion", "top_l", "age_index_offset"});

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare a partition against ground truth");
  std::string truth_path, pred_ages, true_ages, age_mode = "adience";
  ConfigFlags eval_flags;
  evaluate->add_option("--pred", partition_path, "predicted partition")->required();
  evaluate->add_option("--truth", truth_path, "ground-truth partition")->required();
  evaluate->add_option("--pred-ages", pred_ages, "JSON object face_id -> predicted age");
  evaluate->add_option("--true-ages", true_ages, "JSON object face_id -> true age");
  evaluate->add_option("--age-mode", age_mode, "adience | within5")->capture_default_str();
  evaluate->add_option("--out,-o", out, "report path (default stdout)");
  eval_flags.add_to(*evaluate, {"unassigned"});

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled album");
  album::SynthOptions so;
  std::string truth_out, ages_out;
  synth->add_option("--subjects", so.num_subjects, "number of identities")->capture_default_str();
  synth->add_option("--faces", so.faces_per_subject, "photo faces per identity")->capture_default_str();
  synth->add_option("--dim", so.dim, "embedding dimension")->capture_default_str();
  synth->add_option("--noise", so.noise_sigma, "per-coordinate Gaussian noise")->capture_default_str();
  synth->add_option("--seed", so.seed, "random seed")->capture_default_str();
  synth->add_option("--clips", so.clips_per_subject, "video clips per identity")->capture_default_str();
  synth->add_option("--frames", so.frames_per_clip, "frames per clip")->capture_default_str();
  synth->add_option("--out,-o", out, "face records path (JSONL)")->required();
  synth->add_option("--truth-out", truth_out, "ground-truth partition path");
  synth->add_option("--ages-out", ages_out, "true per-face ages path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const auto config = run_flags.resolve();
      const auto report = album::run_pipeline(input, config, album::RunOptions{timings});
      write_json(report.to_json(), out);
      if (!partition_out.empty()) album::save_partition(report.to_partition(), partition_out);
    } else if (*cluster) {
      auto config = cluster_flags.resolve();
      config.disable_refinement();
      const auto report = album::run_pipeline(input, config);
      write_json(album::to_json(report.to_partition()), out);
    } else if (*refine) {
      const auto config = refine_flags.resolve();
      const auto dataset = album::load_dataset(input);
      auto p = partition_for(dataset, album::load_partition(partition_path));
      if (config.refine.separate_same_photo) {
        p = album::split_same_photo(p, dataset, config.cut_threshold, config.refine.same_photo_penalty);
      }
      p = album::filter_small(p, config.refine.min_cluster_size);
      p = album::filter_date_span(p, dataset, config.refine.min_span_days);
      write_json(album::to_json(p), out);
    } else if (*tag) {
      const auto config = tag_flags.resolve();
      const auto dataset = album::load_dataset(input);
      const auto p = partition_for(dataset, album::load_partition(partition_path));
      write_json(tag_json(p, dataset, config.fusion), out);
    } else if (*evaluate) {
      const auto config = eval_flags.resolve();
      const auto pred = album::load_partition(partition_path);
      const auto truth = album::load_partition(truth_path);
      auto j = album::evaluate(pred, truth, config.unassigned).to_json();
      if (!pred_ages.empty() || !true_ages.empty()) {
        if (pred_ages.empty() || true_ages.empty()) {
          throw album::ValidationError("--pred-ages and --true-ages go together");
        }
        const auto mode = album::parse_age_mode(age_mode);
        const auto p = read_age_map(pred_ages);
        const auto t = read_age_map(true_ages);
        std::vector<double> a, b;
        for (const auto& [id, age] : p) {
          auto it = t.find(id);
          if (it == t.end()) continue;
          a.push_back(age);
          b.push_back(it->second);
        }
        j["age_accuracy"] = album::age_range_accuracy(a, b, mode);
        j["age_mode"] = age_mode;
        j["aged_faces"] = a.size();
      }
      write_json(j, out);
    } else if (*synth) {
      const auto album_data = album::generate_synthetic_album(so);
      album::save_dataset(album_data.dataset, out);
      if (!truth_out.empty()) album::save_partition(album_data.truth, truth_out);
      if (!ages_out.empty()) {
        ordered_json ages = ordered_json::object();
        for (const auto& o : album_data.dataset) ages[o.face_id] = album_data.true_ages.at(o.face_id);
        write_json(ages, ages_out);
      }
    }
  } catch (const album::ValidationError& e) {
    std::cerr << "error: " << e.what();
    if (e.line()) std::cerr << " (line " << *e.line() << ")";
    std::cerr << '\n';
    return 1;
  } catch (const album::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
