// Copyright 2026 The opsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "opsum/cluster.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "opsum/corpus.h"

namespace opsum {
namespace {

double Distance(const std::vector<double> &a, const std::vector<double> &b) {
  double sq = 0;
  for (size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sq);
}

// Recomputes every linkage distance from the points on each pass.
std::vector<std::vector<std::string>> NaiveComplete(std::vector<ClusterPoint> points,
                                                    double threshold) {
  std::sort(points.begin(), points.end(),
            [](const auto &a, const auto &b) { return a.id < b.id; });
  std::vector<std::vector<size_t>> clusters;
  for (size_t i = 0; i < points.size(); ++i) clusters.push_back({i});
  auto linkage = [&](const auto &a, const auto &b) {
    double worst = 0;
    for (size_t i : a)
      for (size_t j : b) worst = std::max(worst, Distance(points[i].vector, points[j].vector));
    return worst;
  };
  for (;;) {
    // Clusters stay ordered by smallest member.
    std::sort(clusters.begin(), clusters.end(),
              [](const auto &a, const auto &b) { return a.front() < b.front(); });
    double best = INFINITY;
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < clusters.size(); ++i) {
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = linkage(clusters[i], clusters[j]);
        if (d < best) best = d, bi = i, bj = j;
      }
    }
    if (clusters.size() < 2 || best > threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + bj);
  }
  std::vector<std::vector<std::string>> out;
  for (const auto &c : clusters) {
    std::vector<std::string> ids;
    for (size_t i : c) ids.push_back(points[i].id);
    out.push_back(ids);
  }
  return out;
}

std::vector<ClusterPoint> RandomPoints(std::mt19937_64 &rng, int n, int dim, bool grid) {
  std::uniform_real_distribution<double> coord(0.0, 12.0);
  std::vector<ClusterPoint> points;
  for (int i = 0; i < n; ++i) {
    ClusterPoint p;
    char id[16];
    std::snprintf(id, sizeof id, "p%03d", i);
    p.id = id;
    for (int k = 0; k < dim; ++k) {
      const double x = coord(rng);
      p.vector.push_back(grid ? std::floor(x / 3) * 3 : x);
    }
    points.push_back(std::move(p));
  }
  return points;
}

TEST(AgglomerateTest, MatchesNaiveReference) {
  std::mt19937_64 rng(11);
  ClusterConfig config;
  for (int instance = 0; instance < 100; ++instance) {
    const int n = 1 + static_cast<int>(rng() % 50);
    // Every fourth instance sits on a coarse grid to exercise ties.
    auto points = RandomPoints(rng, n, 2 + instance % 3, instance % 4 == 0);
    EXPECT_EQ(Agglomerate(points, config), NaiveComplete(points, config.threshold))
        << "instance " << instance;
  }
}

TEST(AgglomerateTest, CompleteLinkageDiameterBound) {
  std::mt19937_64 rng(12);
  ClusterConfig config;
  for (int instance = 0; instance < 50; ++instance) {
    auto points = RandomPoints(rng, 40, 3, false);
    std::map<std::string, const ClusterPoint *> by_id;
    for (const auto &p : points) by_id[p.id] = &p;
    size_t covered = 0;
    for (const auto &cluster : Agglomerate(points, config)) {
      covered += cluster.size();
      for (const auto &a : cluster)
        for (const auto &b : cluster)
          EXPECT_LE(Distance(by_id[a]->vector, by_id[b]->vector), config.threshold);
    }
    EXPECT_EQ(covered, points.size());
  }
}

TEST(AgglomerateTest, PermutationInvariant) {
  std::mt19937_64 rng(13);
  ClusterConfig config;
  for (Linkage linkage : {Linkage::kComplete, Linkage::kAverage, Linkage::kSingle}) {
    config.linkage = linkage;
    auto points = RandomPoints(rng, 30, 2, true);
    const auto expected = Agglomerate(points, config);
    for (int trial = 0; trial < 10; ++trial) {
      std::shuffle(points.begin(), points.end(), rng);
      EXPECT_EQ(Agglomerate(points, config), expected);
    }
  }
}

TEST(AgglomerateTest, RaisingThresholdNeverAddsClusters) {
  std::mt19937_64 rng(14);
  auto points = RandomPoints(rng, 45, 3, false);
  size_t previous = points.size() + 1;
  for (double t = 0.5; t <= 25; t += 0.5) {
    ClusterConfig config;
    config.threshold = t;
    const size_t count = Agglomerate(points, config).size();
    EXPECT_LE(count, previous) << "threshold " << t;
    previous = count;
  }
  EXPECT_EQ(previous, 1u);
}

TEST(AgglomerateTest, EdgeCases) {
  ClusterConfig config;
  EXPECT_TRUE(Agglomerate({}, config).empty());
  std::vector<ClusterPoint> one = {{"a", {1, 2}}};
  EXPECT_EQ(Agglomerate(one, config), (std::vector<std::vector<std::string>>{{"a"}}));
  std::vector<ClusterPoint> ragged = {{"a", {1, 2}}, {"b", {1}}};
  EXPECT_THROW(Agglomerate(ragged, config), ValidationError);
  config.threshold = -1;
  EXPECT_THROW(config.Validate(), ValidationError);
  EXPECT_EQ(ParseLinkage("average"), Linkage::kAverage);
  EXPECT_THROW(ParseLinkage("ward"), ValidationError);
}

LabeledPhrase Labeled(std::string id, std::optional<std::string> aspect,
                      std::optional<std::string> sentiment, std::vector<double> v) {
  return {std::move(id), std::move(aspect), std::move(sentiment), std::move(v)};
}

TEST(SummaryTest, OneGroupOneCluster) {
  std::vector<LabeledPhrase> phrases = {Labeled("a", "food", "good", {0, 0}),
                                        Labeled("b", "food", "good", {1, 1}),
                                        Labeled("c", "food", "good", {2, 0})};
  OpinionSummary s = BuildSummary("t1", phrases, ClusterConfig{});
  ASSERT_EQ(s.groups.size(), 1u);
  ASSERT_EQ(s.groups["food|good"].size(), 1u);
  EXPECT_EQ(s.groups["food|good"][0].members, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(SummaryTest, UnlabeledPhrasesAreDropped) {
  std::vector<LabeledPhrase> phrases = {Labeled("a", std::nullopt, "good", {0}),
                                        Labeled("b", "food", std::nullopt, {0}),
                                        Labeled("c", "food", "bad", {0})};
  OpinionSummary s = BuildSummary("t1", phrases, ClusterConfig{});
  ASSERT_EQ(s.groups.size(), 1u);
  EXPECT_EQ(s.groups.begin()->first, "food|bad");
  EXPECT_EQ(s.groups.begin()->second[0].members, std::vector<std::string>{"c"});
}

TEST(SummaryTest, PlantedGroupsAreRecovered) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> jitter(0, 0.8);
  std::vector<LabeledPhrase> phrases;
  std::map<std::string, int> planted;
  for (int i = 0; i < 30; ++i) {
    const int group = i % 3 == 0 ? 1 : 0;  // sizes 20 and 10
    const double centre = group == 0 ? 0.0 : 40.0;
    std::string id = "ph" + std::to_string(100 + i);
    planted[id] = group;
    phrases.push_back(Labeled(id, "service", "bad",
                              {centre + jitter(rng), centre + jitter(rng), jitter(rng)}));
  }
  OpinionSummary s = BuildSummary("t", phrases, ClusterConfig{});
  const auto &clusters = s.groups["service|bad"];
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].members.size(), 20u);  // largest first
  for (size_t c = 0; c < 2; ++c)
    for (const auto &id : clusters[c].members) EXPECT_EQ(planted[id], static_cast<int>(c));
}

TEST(SummaryTest, JsonShape) {
  std::vector<LabeledPhrase> phrases = {Labeled("s:0,1", "food", "good", {0}),
                                        Labeled("s:3", "food", "good", {50})};
  OpinionSummary s = BuildSummary("t9", phrases, ClusterConfig{});
  auto j = SummaryToJson(s, {{"s:0,1", "great pasta"}});
  EXPECT_EQ(j["target"], "t9");
  const auto &list = j["groups"]["food|good"];
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0]["cluster_id"], 0);
  EXPECT_EQ(list[0]["phrases"][0], "great pasta");
  EXPECT_EQ(list[1]["phrases"][0], "s:3");
}

}  // namespace
}  // namespace opsum
