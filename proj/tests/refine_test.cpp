#include <gtest/gtest.h>

#include <random>
#include <set>

#include "album/refine.hpp"
#include "oracles.hpp"

using namespace album;

namespace {

FaceObservation face(const std::string& id, const std::string& media, std::vector<double> e,
                     Date date = Date::from_ymd(2017, 1, 1), MediaKind kind = MediaKind::photo) {
  FaceObservation o;
  o.face_id = id;
  o.media_id = media;
  o.media_kind = kind;
  o.created_at = date;
  o.embedding = std::move(e);
  return o;
}

std::vector<double> unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Each retained output cluster is a subset of one input cluster, and no face
// changes from unassigned to assigned.
void expect_only_unassigns(const Partition& before, const Partition& after) {
  ASSERT_EQ(before.face_ids(), after.face_ids());
  std::map<int, int> origin;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const int b = before.labels()[i], a = after.labels()[i];
    if (a < 0) continue;
    ASSERT_GE(b, 0);
    auto [it, fresh] = origin.emplace(a, b);
    EXPECT_EQ(it->second, b);
  }
  // Retained clusters keep all of their members.
  for (const auto& members : after.clusters()) {
    const int b = before.labels()[members.front()];
    std::size_t count = 0;
    for (int l : before.labels()) count += l == b ? 1 : 0;
    EXPECT_EQ(members.size(), count);
  }
}

struct RandomAlbum {
  Dataset dataset;
  Partition partition;
};

RandomAlbum random_album(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(1, 30), photo_dist(0, 8), label_dist(-1, 4), day(0, 800);
  const int n = n_dist(rng);
  std::vector<FaceObservation> faces;
  std::vector<std::string> ids;
  std::vector<int> raw;
  for (int i = 0; i < n; ++i) {
    const std::string id = "f" + std::to_string(i);
    const bool video = photo_dist(rng) == 0;
    faces.push_back(face(id, (video ? "clip" : "photo") + std::to_string(photo_dist(rng)), oracle::random_unit(rng, 3),
                         Date::from_ymd(2016, 1, 1).plus_days(day(rng)), video ? MediaKind::video : MediaKind::photo));
    ids.push_back(id);
    raw.push_back(label_dist(rng));
  }
  return {Dataset(std::move(faces)), Partition::from_assignment(ids, raw)};
}

}  // namespace

TEST(SplitSamePhoto, DistinctPhotosUnchanged) {
  const Dataset d({face("a", "p1", unit(0)), face("b", "p2", unit(1.0)), face("c", "p3", unit(2.0))});
  const Partition p({"a", "b", "c"}, {0, 0, 0});
  EXPECT_EQ(split_same_photo(p, d, 0.5, 1e6), p);
}

TEST(SplitSamePhoto, TwoFacesOfOnePhotoBecomeSingletons) {
  const Dataset d({face("a", "p1", unit(0)), face("b", "p1", unit(0))});
  const auto out = split_same_photo(Partition({"a", "b"}, {0, 0}), d, 0.5, 1e6);
  EXPECT_EQ(out.num_clusters(), 2u);
}

TEST(SplitSamePhoto, ThreeFacesKeepTheCloserPairTogether) {
  // a and b share a photo. c sits nearer to a than to b, so complete linkage
  // merges {a, c} first; joining b would cost the penalty.
  const Dataset d({face("a", "p1", unit(0.0)), face("b", "p1", unit(0.02)), face("c", "p2", unit(0.005))});
  const auto out = split_same_photo(Partition({"a", "b", "c"}, {0, 0, 0}), d, 0.5, 1e6);
  EXPECT_EQ(out.num_clusters(), 2u);
  EXPECT_EQ(out.label_of("a"), out.label_of("c"));
  EXPECT_NE(out.label_of("a"), out.label_of("b"));
}

TEST(SplitSamePhoto, VideoFramesAreExempt) {
  const Dataset d({face("a", "v1", unit(0), Date::from_ymd(2017, 1, 1), MediaKind::video),
                   face("b", "v1", unit(0.01), Date::from_ymd(2017, 1, 1), MediaKind::video)});
  const Partition p({"a", "b"}, {0, 0});
  EXPECT_EQ(split_same_photo(p, d, 0.5, 1e6), p);
}

TEST(SplitSamePhoto, PenaltyMustExceedThreshold) {
  const Dataset d({face("a", "p1", unit(0))});
  EXPECT_THROW(split_same_photo(Partition({"a"}, {0}), d, 2.0, 2.0), ValidationError);
  EXPECT_THROW(split_same_photo(Partition({"a"}, {0}), d, 0.0, 2.0), ValidationError);
}

TEST(SplitSamePhoto, RandomAlbumsHaveNoViolationsAndAreIdempotent) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto album = random_album(rng);
    const auto out = split_same_photo(album.partition, album.dataset, 0.8, 1e6);
    for (const auto& members : out.clusters()) {
      std::set<std::string> photos;
      for (std::size_t m : members) {
        const auto& o = album.dataset.at(out.face_ids()[m]);
        if (o.media_kind == MediaKind::photo) {
          EXPECT_TRUE(photos.insert(o.media_id).second);
        }
      }
    }
    // Unassigned faces stay unassigned and clusters only split.
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out.labels()[i] < 0, album.partition.labels()[i] < 0);
      for (std::size_t j = 0; j < out.size(); ++j) {
        if (out.labels()[i] >= 0 && out.labels()[i] == out.labels()[j]) {
          EXPECT_EQ(album.partition.labels()[i], album.partition.labels()[j]);
        }
      }
    }
    EXPECT_EQ(split_same_photo(out, album.dataset, 0.8, 1e6), out);
  }
}

TEST(FilterSmall, Examples) {
  const Partition p = Partition::from_assignment({"a", "b", "c", "d", "e", "f", "g", "h"}, {0, 0, 0, 0, 0, 1, 1, 2});
  EXPECT_EQ(filter_small(p, 1), p);
  const auto kept = filter_small(p, 3);
  EXPECT_EQ(kept.num_clusters(), 1u);
  EXPECT_EQ(kept.unassigned().size(), 3u);
  const auto none = filter_small(p, 6);
  EXPECT_EQ(none.num_clusters(), 0u);
  EXPECT_EQ(none.unassigned().size(), 8u);
  EXPECT_THROW(filter_small(p, 0), ValidationError);
}

TEST(FilterSmall, WeightsCountTrackFrames) {
  const Partition p({"t", "x"}, {0, 1});
  const auto out = filter_small(p, 3, {{"t", 5}});
  EXPECT_EQ(out.num_clusters(), 1u);
  EXPECT_EQ(out.label_of("x"), Partition::kUnassigned);
}

TEST(FilterDateSpan, Examples) {
  const Dataset d({face("a", "p1", unit(0), Date::parse("2017-01-01")), face("b", "p2", unit(0), Date::parse("2017-01-01")),
                   face("c", "p3", unit(1), Date::parse("2016-05-01")), face("e", "p4", unit(1), Date::parse("2017-06-01"))});
  const Partition p({"a", "b", "c", "e"}, {0, 0, 1, 1});
  EXPECT_EQ(filter_date_span(p, d, 0), p);
  const auto out = filter_date_span(p, d, 1);
  EXPECT_EQ(out.label_of("a"), Partition::kUnassigned);
  EXPECT_EQ(out.num_clusters(), 1u);
  EXPECT_EQ(filter_date_span(p, d, 30).label_of("c"), filter_date_span(p, d, 30).label_of("e"));
  EXPECT_EQ(filter_date_span(p, d, 397).num_clusters(), 0u);
  EXPECT_THROW(filter_date_span(p, d, -1), ValidationError);
}

TEST(Filters, IdempotentAndOnlyUnassign) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> size(1, 6), span(0, 500);
  for (int trial = 0; trial < 300; ++trial) {
    const auto album = random_album(rng);
    const auto small = filter_small(album.partition, static_cast<std::size_t>(size(rng)));
    expect_only_unassigns(album.partition, small);
    EXPECT_EQ(filter_small(small, 1), small);
    const std::size_t s = static_cast<std::size_t>(size(rng));
    EXPECT_EQ(filter_small(filter_small(album.partition, s), s), filter_small(album.partition, s));

    const long days = span(rng);
    const auto spanned = filter_date_span(album.partition, album.dataset, days);
    expect_only_unassigns(album.partition, spanned);
    EXPECT_EQ(filter_date_span(spanned, album.dataset, days), spanned);
  }
}
