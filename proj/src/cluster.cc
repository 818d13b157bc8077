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
#include <limits>
#include <numeric>

#include "opsum/corpus.h"

namespace opsum {

std::string_view LinkageName(Linkage linkage) {
  switch (linkage) {
    case Linkage::kComplete: return "complete";
    case Linkage::kAverage: return "average";
    case Linkage::kSingle: return "single";
  }
  return "complete";
}

Linkage ParseLinkage(std::string_view name) {
  if (name == "complete") return Linkage::kComplete;
  if (name == "average") return Linkage::kAverage;
  if (name == "single") return Linkage::kSingle;
  throw ValidationError("unknown linkage '" + std::string(name) + "'");
}

void ClusterConfig::Validate() const {
  if (!(threshold > 0)) throw ValidationError("cluster threshold must be > 0");
}

std::vector<std::vector<std::string>> Agglomerate(std::span<const ClusterPoint> points,
                                                  const ClusterConfig &config) {
  config.Validate();
  const size_t n = points.size();
  if (n == 0) return {};
  const size_t dim = points[0].vector.size();
  for (const ClusterPoint &p : points) {
    if (p.vector.size() != dim) {
      throw ValidationError("point " + p.id + " has dimension " +
                            std::to_string(p.vector.size()) + ", expected " +
                            std::to_string(dim));
    }
  }
  // Work in id order so the result does not depend on input order.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return points[a].id < points[b].id; });

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const auto &a = points[order[i]].vector;
      const auto &b = points[order[j]].vector;
      double sq = 0;
      for (size_t k = 0; k < dim; ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
      dist[i][j] = dist[j][i] = std::sqrt(sq);
    }
  }

  // Cluster c is alive while size[c] > 0; its slot index is its smallest
  // member, since merges always keep the lower slot.
  std::vector<size_t> size(n, 1);
  std::vector<std::vector<size_t>> members(n);
  for (size_t i = 0; i < n; ++i) members[i] = {i};
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    size_t bi = n, bj = n;
    for (size_t i = 0; i < n; ++i) {
      if (size[i] == 0) continue;
      for (size_t j = i + 1; j < n; ++j) {
        if (size[j] == 0) continue;
        if (dist[i][j] < best) {
          best = dist[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n || best > config.threshold) break;
    // Lance-Williams update of the merged row.
    for (size_t k = 0; k < n; ++k) {
      if (size[k] == 0 || k == bi || k == bj) continue;
      double merged = 0;
      switch (config.linkage) {
        case Linkage::kComplete: merged = std::max(dist[bi][k], dist[bj][k]); break;
        case Linkage::kSingle: merged = std::min(dist[bi][k], dist[bj][k]); break;
        case Linkage::kAverage:
          merged = (size[bi] * dist[bi][k] + size[bj] * dist[bj][k]) /
                   static_cast<double>(size[bi] + size[bj]);
          break;
      }
      dist[bi][k] = dist[k][bi] = merged;
    }
    size[bi] += size[bj];
    size[bj] = 0;
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    members[bj].clear();
  }

  std::vector<std::vector<std::string>> clusters;
  for (size_t i = 0; i < n; ++i) {
    if (size[i] == 0) continue;
    std::vector<size_t> m = members[i];
    std::sort(m.begin(), m.end());
    std::vector<std::string> ids;
    for (size_t slot : m) ids.push_back(points[order[slot]].id);
    clusters.push_back(std::move(ids));
  }
  return clusters;
}

OpinionSummary BuildSummary(std::string target_id,
                            std::span<const LabeledPhrase> phrases,
                            const ClusterConfig &config) {
  std::map<std::pair<std::string, std::string>, std::vector<ClusterPoint>> grouped;
  for (const LabeledPhrase &p : phrases) {
    if (!p.aspect || !p.sentiment) continue;
    grouped[{*p.aspect, *p.sentiment}].push_back({p.phrase_id, p.embedding});
  }
  OpinionSummary summary;
  summary.target_id = std::move(target_id);
  for (const auto &[key, points] : grouped) {
    auto clusters = Agglomerate(points, config);
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const auto &a, const auto &b) { return a.size() > b.size(); });
    auto &out = summary.groups[key.first + "|" + key.second];
    for (auto &ids : clusters) out.push_back({key.first, key.second, std::move(ids)});
  }
  return summary;
}

nlohmann::json SummaryToJson(const OpinionSummary &summary,
                             const std::map<std::string, std::string> &surfaces) {
  nlohmann::json groups = nlohmann::json::object();
  for (const auto &[key, clusters] : summary.groups) {
    nlohmann::json list = nlohmann::json::array();
    for (size_t c = 0; c < clusters.size(); ++c) {
      nlohmann::json texts = nlohmann::json::array();
      for (const std::string &id : clusters[c].members) {
        auto it = surfaces.find(id);
        texts.push_back(it == surfaces.end() ? id : it->second);
      }
      list.push_back({{"cluster_id", c},
                      {"phrase_ids", clusters[c].members},
                      {"phrases", texts}});
    }
    groups[key] = list;
  }
  return {{"target", summary.target_id}, {"groups", groups}};
}

}  // namespace opsum
