#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "album/metrics.hpp"
#include "album/pipeline.hpp"
#include "album/synth.hpp"

using namespace album;

namespace {

FaceObservation photo(const std::string& id, const std::string& media, std::vector<double> e) {
  FaceObservation o;
  o.face_id = id;
  o.media_id = media;
  o.created_at = Date::from_ymd(2018, 3, 3);
  o.embedding = std::move(e);
  return o;
}

void expect_conserved(const AlbumReport& report, const Dataset& input) {
  std::multiset<std::string> seen;
  for (const auto& c : report.clusters) seen.insert(c.members.begin(), c.members.end());
  seen.insert(report.unassigned.begin(), report.unassigned.end());
  EXPECT_EQ(seen.size(), input.size());
  for (const auto& o : input) EXPECT_EQ(seen.count(o.face_id), 1u) << o.face_id;
}

SyntheticAlbum mixed_album(std::uint64_t seed) {
  SynthOptions options;
  options.num_subjects = 6;
  options.faces_per_subject = 8;
  options.clips_per_subject = 1;
  options.frames_per_clip = 7;
  options.dim = 32;
  options.noise_sigma = 0.03;
  options.seed = seed;
  return generate_synthetic_album(options);
}

}  // namespace

TEST(Pipeline, EmptyAlbum) {
  const auto report = run_pipeline(Dataset{}, PipelineConfig{});
  EXPECT_TRUE(report.clusters.empty());
  EXPECT_TRUE(report.unassigned.empty());
  EXPECT_EQ(report.num_faces, 0u);
}

TEST(Pipeline, TwoIdenticalPhotosFormOneCluster) {
  PipelineConfig config;
  config.refine.min_cluster_size = 1;
  const Dataset d({photo("a", "p1", {1, 0}), photo("b", "p2", {1, 0})});
  const auto report = run_pipeline(d, config);
  ASSERT_EQ(report.clusters.size(), 1u);
  EXPECT_EQ(report.clusters[0].members, (std::vector<std::string>{"a", "b"}));
}

TEST(Pipeline, RecoversWellSeparatedSubjects) {
  const auto album = generate_synthetic_album(3, 6, 32, 0.02, 4);
  PipelineConfig config;
  config.cut_threshold = 0.5;
  const auto report = run_pipeline(album.dataset, config);
  EXPECT_EQ(report.clusters.size(), 3u);
  EXPECT_EQ(adjusted_rand_index(report.to_partition(), album.truth), 1.0);
  for (const auto& c : report.clusters) {
    EXPECT_TRUE(c.attributes.gender.has_value());
    EXPECT_TRUE(c.attributes.born_year.has_value());
  }
}

TEST(Pipeline, RankOrderMethodRuns) {
  const auto album = generate_synthetic_album(3, 6, 32, 0.02, 4);
  PipelineConfig config;
  config.method = ClusterMethod::rank_order;
  config.rank_order.knn = 3;
  config.cut_threshold = 0.5;
  const auto report = run_pipeline(album.dataset, config);
  expect_conserved(report, album.dataset);
}

TEST(Pipeline, FaceConservationAcrossConfigs) {
  const auto album = mixed_album(8);
  for (int stride : {1, 2, 3}) {
    for (double t : {0.2, 0.6, 1.2}) {
      for (std::size_t min_size : {1, 4, 20}) {
        PipelineConfig config;
        config.frame_stride = stride;
        config.cut_threshold = t;
        config.refine.min_cluster_size = min_size;
        config.refine.min_span_days = min_size == 20 ? 100 : 0;
        const auto report = run_pipeline(album.dataset, config);
        expect_conserved(report, album.dataset);
        EXPECT_EQ(report.to_partition().size(), album.dataset.size());
      }
    }
  }
}

TEST(Pipeline, TracksAreExpandedToFrames) {
  const auto album = mixed_album(9);
  PipelineConfig config;
  config.cut_threshold = 0.6;
  config.frame_stride = 1;
  const auto report = run_pipeline(album.dataset, config);
  EXPECT_EQ(report.num_tracks, 6u);
  EXPECT_EQ(report.num_gallery_records, 6u * 8 + 6);
  const Partition p = report.to_partition();
  // Every frame of one clip lands in the same cluster.
  for (std::size_t s = 0; s < 6; ++s) {
    const std::string prefix = "s" + std::to_string(s) + "_c0_k";
    for (int k = 1; k < 7; ++k) EXPECT_EQ(p.label_of(prefix + std::to_string(k)), p.label_of(prefix + "0"));
  }
}

TEST(Pipeline, DisabledRefinementGivesRawClustering) {
  const auto album = generate_synthetic_album(8, 5, 32, 0.08, 10);
  PipelineConfig config;
  config.cut_threshold = 0.7;
  config.disable_refinement();
  const auto report = run_pipeline(album.dataset, config);
  const Partition raw = cut(linkage(pairwise_distances(album.dataset), config.linkage), config.cut_threshold,
                            album.dataset.face_ids());
  EXPECT_TRUE(same_grouping(report.to_partition(), raw));
  EXPECT_TRUE(report.unassigned.empty());
}

TEST(Pipeline, SamePhotoFacesNeverShareAnIdentity) {
  // Three near-identical faces; a and b come from one photo.
  PipelineConfig config;
  config.refine.min_cluster_size = 1;
  const Dataset d({photo("a", "p1", {1.0, 0.0}), photo("b", "p1", {0.9998, 0.02}), photo("c", "p2", {0.99995, 0.01})});
  const Partition p = run_pipeline(d, config).to_partition();
  EXPECT_NE(p.label_of("a"), p.label_of("b"));
}

TEST(Pipeline, ByteIdenticalReports) {
  const auto album = mixed_album(11);
  PipelineConfig config;
  config.cut_threshold = 0.6;
  config.born_year_weight = 0.3;
  const auto a = run_pipeline(album.dataset, config).to_json().dump(2);
  const auto b = run_pipeline(album.dataset, config).to_json().dump(2);
  EXPECT_EQ(a, b);
  const auto timed = run_pipeline(album.dataset, config, RunOptions{true});
  ASSERT_TRUE(timed.timings_ms.has_value());
  EXPECT_TRUE(timed.timings_ms->count("cluster"));
}

TEST(Pipeline, BornYearFeatureNeedsAgePosteriors) {
  PipelineConfig config;
  config.born_year_weight = 0.5;
  const Dataset d({photo("a", "p1", {1, 0}), photo("b", "p2", {1, 0})});
  try {
    run_pipeline(d, config);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("stage 'born_year'"), std::string::npos);
  }
}

TEST(Pipeline, LoadErrorsCarryStageLabel) {
  try {
    run_pipeline("/nonexistent/album.jsonl", PipelineConfig{});
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("stage 'load'"), std::string::npos);
  }
}

TEST(Config, TextRoundTrip) {
  PipelineConfig c;
  c.method = ClusterMethod::rank_order;
  c.linkage = LinkageKind::median;
  c.cut_threshold = 0.123456789012345;
  c.clip_threshold = 0.4;
  c.frame_stride = 5;
  c.rank_order.knn = 4;
  c.refine.min_span_days = 30;
  c.fusion.gender = FusionKind::simple_voting;
  c.fusion.age = FusionStrategy::expected(7);
  c.fusion.age_index_offset = 1.0;
  c.born_year_weight = 0.25;
  c.unassigned = UnassignedPolicy::singleton;
  const auto back = parse_config_text(to_config_text(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_NE(config_hash(c), config_hash(PipelineConfig{}));
  EXPECT_EQ(parse_config_text(to_config_text(PipelineConfig{})), PipelineConfig{});
}

TEST(Config, FileValuesOverDefaultsAndCommentsIgnored) {
  const auto c = parse_config_text("# tuned\ncut_threshold = 0.7   # inline\n\ntop_l=5\n");
  EXPECT_DOUBLE_EQ(c.cut_threshold, 0.7);
  EXPECT_EQ(c.fusion.age.top_l, 5u);
  EXPECT_EQ(c.refine.min_cluster_size, 4u);
  PipelineConfig base;
  base.frame_stride = 9;
  EXPECT_EQ(parse_config_text("top_l = 2", base).frame_stride, 9);
}

TEST(Config, ErrorsNameTheLine) {
  try {
    parse_config_text("top_l = 3\ncut_threshold = fast\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_config_text("colour = red"), ValidationError);
  EXPECT_THROW(parse_config_text("just words"), ValidationError);
  PipelineConfig bad;
  bad.refine.same_photo_penalty = 0.5;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/album.conf"), IoError);
}
