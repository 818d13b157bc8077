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

#ifndef OPSUM_CLUSTER_H_
#define OPSUM_CLUSTER_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "opsum/extraction.h"

namespace opsum {

enum class Linkage { kComplete, kAverage, kSingle };
std::string_view LinkageName(Linkage linkage);
Linkage ParseLinkage(std::string_view name);

struct ClusterConfig {
  double threshold = 7.0;
  Linkage linkage = Linkage::kComplete;

  void Validate() const;
};

struct ClusterPoint {
  std::string id;
  std::vector<double> vector;
};

// Bottom-up agglomerative clustering under Euclidean distance. Merges the
// closest pair while its linkage distance is <= threshold; ties go to the
// pair with the smallest (min member id, min member id). Each output cluster
// lists ids in ascending order; clusters are ordered by their first id.
std::vector<std::vector<std::string>> Agglomerate(std::span<const ClusterPoint> points,
                                                  const ClusterConfig &config);

struct OpinionCluster {
  std::string aspect;
  std::string sentiment;
  std::vector<std::string> members;  // phrase ids
};

struct OpinionSummary {
  std::string target_id;
  // "<aspect>|<sentiment>" -> clusters, largest first.
  std::map<std::string, std::vector<OpinionCluster>> groups;
};

struct LabeledPhrase {
  std::string phrase_id;
  std::optional<std::string> aspect;
  std::optional<std::string> sentiment;
  std::vector<double> embedding;
};

// Groups one target's phrases by (aspect, sentiment), dropping phrases with
// no label in either schema, and clusters each group.
OpinionSummary BuildSummary(std::string target_id,
                            std::span<const LabeledPhrase> phrases,
                            const ClusterConfig &config);

// {"target": id, "groups": {"aspect|sentiment": [{"cluster_id", "phrase_ids",
// "phrases": [surface...]}]}}
nlohmann::json SummaryToJson(const OpinionSummary &summary,
                             const std::map<std::string, std::string> &surfaces);

}  // namespace opsum

#endif  // OPSUM_CLUSTER_H_
