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

#include "opsum/distill.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace opsum {

void DistillConfig::Validate() const {
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
  if (!(alpha > 0)) throw ValidationError("alpha must be > 0");
  if (!(theta1 > 0 && theta1 < 1)) throw ValidationError("theta1 must lie in (0, 1)");
  if (!(theta2 > 0 && theta2 < 1)) throw ValidationError("theta2 must lie in (0, 1)");
}

std::string_view OutcomeName(PhraseOutcome outcome) {
  switch (outcome) {
    case PhraseOutcome::kSoft: return "soft";
    case PhraseOutcome::kBackground: return "background";
    case PhraseOutcome::kExcluded: return "excluded";
  }
  return "excluded";
}

PhraseOutcome ParseOutcome(std::string_view name) {
  if (name == "soft") return PhraseOutcome::kSoft;
  if (name == "background") return PhraseOutcome::kBackground;
  if (name == "excluded") return PhraseOutcome::kExcluded;
  throw ParseError("unknown phrase outcome '" + std::string(name) + "'");
}

std::vector<double> Soften(std::span<const double> scores, double alpha) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(alpha * (scores[i] - top));
    total += out[i];
  }
  for (double &v : out) v /= total;
  return out;
}

double DistillLoss(std::span<const double> target,
                   std::span<const double> predicted) {
  if (target.size() != predicted.size()) {
    throw ValidationError("distill_loss: size mismatch");
  }
  double loss = 0;
  for (size_t i = 0; i < target.size(); ++i) {
    if (target[i] <= 0) continue;
    loss += target[i] * std::log(target[i] / std::max(predicted[i], 1e-12));
  }
  return loss;
}

std::vector<int> TopK(std::span<const double> scores,
                      std::span<const std::string> ids, int k) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t keep = std::min(order.size(), static_cast<size_t>(std::max(k, 0)));
  auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), better);
  order.resize(keep);
  return order;
}

std::vector<std::vector<int>> SelectTopK(const SphereSpace &space,
                                         std::span<const Sentence> corpus,
                                         int k) {
  const int n_cats = space.categories.size();
  std::vector<std::vector<double>> by_category(n_cats,
                                               std::vector<double>(corpus.size()));
  std::vector<std::string> ids(corpus.size());
  for (size_t s = 0; s < corpus.size(); ++s) {
    ids[s] = corpus[s].id;
    auto scores = SentenceScores(space, corpus[s].id);
    for (int c = 0; c < n_cats; ++c) by_category[c][s] = scores[c];
  }
  std::vector<std::vector<int>> out;
  for (int c = 0; c < n_cats; ++c) out.push_back(TopK(by_category[c], ids, k));
  return out;
}

std::vector<PseudoSentenceLabel> PseudoLabelSentences(
    const SphereSpace &space, std::span<const Sentence> corpus,
    const DistillConfig &config) {
  config.Validate();
  auto selected = SelectTopK(space, corpus, config.top_k);
  std::vector<PseudoSentenceLabel> labels;
  for (size_t c = 0; c < selected.size(); ++c) {
    for (int s : selected[c]) {
      auto scores = SentenceScores(space, corpus[s].id);
      labels.push_back({corpus[s].id, static_cast<int>(c),
                        Soften(scores, config.alpha)});
    }
  }
  return labels;
}

PseudoPhraseLabel JointAgreementLabel(std::span<const double> predicted,
                                      std::span<const double> similarity,
                                      const DistillConfig &config) {
  if (predicted.size() != similarity.size() || predicted.empty()) {
    throw ValidationError("joint agreement: classifier has " +
                          std::to_string(predicted.size()) +
                          " classes, embedding has " +
                          std::to_string(similarity.size()));
  }
  const auto top_y = std::max_element(predicted.begin(), predicted.end());
  const auto top_sim = std::max_element(similarity.begin(), similarity.end());
  const bool agree = (top_y - predicted.begin()) == (top_sim - similarity.begin());
  PseudoPhraseLabel label;
  if (agree && *top_y >= config.theta1 && *top_sim >= config.theta2) {
    label.outcome = PhraseOutcome::kSoft;
    label.distribution = Soften(predicted, config.alpha);
  } else if (*top_y < config.theta1 && *top_sim < config.theta2) {
    label.outcome = PhraseOutcome::kBackground;
    label.distribution.assign(predicted.size(), 1.0 / predicted.size());
  }
  return label;
}

nlohmann::json SentenceLabelToJson(const PseudoSentenceLabel &label) {
  return {{"id", label.sentence_id},
          {"category", label.source_category},
          {"distribution", label.distribution}};
}

PseudoSentenceLabel SentenceLabelFromJson(const nlohmann::json &j) {
  try {
    return {j.at("id").get<std::string>(), j.at("category").get<int>(),
            j.at("distribution").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("sentence label: ") + e.what());
  }
}

nlohmann::json PhraseLabelToJson(const PseudoPhraseLabel &label) {
  return {{"id", label.phrase_id},
          {"outcome", OutcomeName(label.outcome)},
          {"distribution", label.distribution}};
}

PseudoPhraseLabel PhraseLabelFromJson(const nlohmann::json &j) {
  try {
    return {j.at("id").get<std::string>(),
            ParseOutcome(j.at("outcome").get<std::string>()),
            j.at("distribution").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("phrase label: ") + e.what());
  }
}

}  // namespace opsum
