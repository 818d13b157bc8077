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

#ifndef OPSUM_EVALUATION_H_
#define OPSUM_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace opsum {

struct MetricReport {
  double accuracy = 0;
  double precision = 0;  // macro
  double recall = 0;     // macro
  double macro_f1 = 0;
};

// Gold labels for one item. Empty means "none"; with several labels a
// prediction is correct if it matches any, and the first label is used for
// the per-class counts.
using GoldLabels = std::vector<std::string>;
using Prediction = std::optional<std::string>;

// Per-class scores over `classes`; "none" is a rejection outcome that counts
// toward accuracy but is not itself a class. A class absent from both sides
// scores 0. Throws ValidationError on a length mismatch.
MetricReport ClassificationMetrics(std::span<const Prediction> predicted,
                                   std::span<const GoldLabels> gold,
                                   std::span<const std::string> classes);

// Distinct case-folded words over total word tokens.
double Diversity(std::span<const std::string> phrases);

struct IntrusionSet {
  std::string set_id;
  std::vector<std::string> in_cluster;  // 5 phrases
  std::string intruder;
  std::string shared_word;
  std::vector<std::string> shuffled;  // the 6 phrases as shown to a judge
  int answer_key = 0;                 // index of the intruder in `shuffled`
};

inline constexpr int kIntrusionClusterPhrases = 5;

// Picks, uniformly among all feasible (cluster, word) pairs, a cluster with
// five phrases sharing a word and an outside phrase containing that word.
// Returns nullopt when no pair qualifies.
std::optional<IntrusionSet> MakeIntrusionSet(
    std::span<const std::vector<std::string>> clusters, uint64_t seed);

// True if the shared word occurs in all six phrases and the answer key
// points at the intruder.
bool CheckIntrusionSet(const IntrusionSet &set);

double CoherenceScore(std::span<const IntrusionSet> sets, std::span<const int> answers);

// The judge-facing view omits the answer; the key file carries it.
nlohmann::json IntrusionSetToJson(const IntrusionSet &set);
nlohmann::json IntrusionKeyToJson(const IntrusionSet &set);
IntrusionSet IntrusionSetFromJson(const nlohmann::json &set, const nlohmann::json &key);

}  // namespace opsum

#endif  // OPSUM_EVALUATION_H_
