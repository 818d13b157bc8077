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

#ifndef OPSUM_DISTILL_H_
#define OPSUM_DISTILL_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "opsum/corpus.h"
#include "opsum/sphere.h"

namespace opsum {

struct DistillConfig {
  int top_k = 2000;
  double alpha = 10.0;   // softmax temperature applied to scores
  double theta1 = 0.35;  // classifier confidence threshold
  double theta2 = 0.30;  // embedding similarity threshold

  void Validate() const;
};

// Soft target for one sentence, recorded once per category whose top-k list
// selected it.
struct PseudoSentenceLabel {
  std::string sentence_id;
  int source_category = 0;
  std::vector<double> distribution;
};

enum class PhraseOutcome { kSoft, kBackground, kExcluded };
std::string_view OutcomeName(PhraseOutcome outcome);
PhraseOutcome ParseOutcome(std::string_view name);

struct PseudoPhraseLabel {
  std::string phrase_id;
  PhraseOutcome outcome = PhraseOutcome::kExcluded;
  std::vector<double> distribution;  // empty when excluded
};

// softmax(alpha * scores), max-subtracted.
std::vector<double> Soften(std::span<const double> scores, double alpha);

// sum_i l_i log(l_i / max(y_i, 1e-12)); zero-mass terms of l contribute 0.
double DistillLoss(std::span<const double> target,
                   std::span<const double> predicted);

// Indices of the k highest scores, descending; ties go to the smaller id.
std::vector<int> TopK(std::span<const double> scores,
                      std::span<const std::string> ids, int k);

// Per category, the indices into `corpus` of its top-k sentences by x.a_i.
std::vector<std::vector<int>> SelectTopK(const SphereSpace &space,
                                         std::span<const Sentence> corpus,
                                         int k);

// Runs SelectTopK and softens each selected sentence's scores.
std::vector<PseudoSentenceLabel> PseudoLabelSentences(
    const SphereSpace &space, std::span<const Sentence> corpus,
    const DistillConfig &config);

// Admits a phrase only when the classifier distribution and the embedding
// similarity agree. Throws ValidationError on a size mismatch.
PseudoPhraseLabel JointAgreementLabel(std::span<const double> predicted,
                                      std::span<const double> similarity,
                                      const DistillConfig &config);

nlohmann::json SentenceLabelToJson(const PseudoSentenceLabel &label);
PseudoSentenceLabel SentenceLabelFromJson(const nlohmann::json &j);
nlohmann::json PhraseLabelToJson(const PseudoPhraseLabel &label);
PseudoPhraseLabel PhraseLabelFromJson(const nlohmann::json &j);

}  // namespace opsum

#endif  // OPSUM_DISTILL_H_
