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

#include "opsum/evaluation.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "opsum/corpus.h"

namespace opsum {

MetricReport ClassificationMetrics(std::span<const Prediction> predicted,
                                   std::span<const GoldLabels> gold,
                                   std::span<const std::string> classes) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("metrics: " + std::to_string(predicted.size()) +
                          " predictions vs " + std::to_string(gold.size()) + " gold labels");
  }
  struct Counts { int64_t tp = 0, fp = 0, fn = 0; };
  std::map<std::string, Counts> counts;
  for (const std::string &c : classes) counts[c];

  MetricReport report;
  int64_t correct = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const Prediction &p = predicted[i];
    const GoldLabels &g = gold[i];
    const bool hit = p ? std::find(g.begin(), g.end(), *p) != g.end() : g.empty();
    correct += hit;
    const Prediction first = g.empty() ? Prediction() : Prediction(g.front());
    if (p == first) {
      if (p && counts.count(*p)) ++counts[*p].tp;
      continue;
    }
    if (p && counts.count(*p)) ++counts[*p].fp;
    if (first && counts.count(*first)) ++counts[*first].fn;
  }
  if (!predicted.empty()) report.accuracy = double(correct) / predicted.size();
  if (classes.empty()) return report;
  for (const auto &[name, c] : counts) {
    if (c.tp + c.fp > 0) report.precision += double(c.tp) / (c.tp + c.fp);
    if (c.tp + c.fn > 0) report.recall += double(c.tp) / (c.tp + c.fn);
    if (c.tp + c.fp + c.fn > 0) {
      report.macro_f1 += 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn);
    }
  }
  report.precision /= counts.size();
  report.recall /= counts.size();
  report.macro_f1 /= counts.size();
  return report;
}

double Diversity(std::span<const std::string> phrases) {
  std::set<std::string> distinct;
  size_t total = 0;
  for (const std::string &phrase : phrases) {
    for (const std::string &word : SplitWhitespace(phrase)) {
      distinct.insert(FoldCase(word));
      ++total;
    }
  }
  return total == 0 ? 0.0 : double(distinct.size()) / total;
}

namespace {

std::set<std::string> WordSet(const std::string &phrase) {
  std::set<std::string> words;
  for (const std::string &w : SplitWhitespace(phrase)) words.insert(FoldCase(w));
  return words;
}

}  // namespace

std::optional<IntrusionSet> MakeIntrusionSet(
    std::span<const std::vector<std::string>> clusters, uint64_t seed) {
  std::vector<std::vector<std::set<std::string>>> words(clusters.size());
  for (size_t c = 0; c < clusters.size(); ++c) {
    for (const std::string &p : clusters[c]) words[c].push_back(WordSet(p));
  }
  struct Option {
    size_t cluster;
    std::string word;
    std::vector<size_t> members;                     // in-cluster phrases with word
    std::vector<std::pair<size_t, size_t>> outside;  // (cluster, phrase)
  };
  std::vector<Option> options;
  for (size_t c = 0; c < clusters.size(); ++c) {
    if (clusters[c].size() < kIntrusionClusterPhrases) continue;
    std::map<std::string, std::vector<size_t>> by_word;
    for (size_t i = 0; i < words[c].size(); ++i) {
      for (const std::string &w : words[c][i]) by_word[w].push_back(i);
    }
    for (auto &[word, members] : by_word) {
      if (members.size() < kIntrusionClusterPhrases) continue;
      Option option{c, word, members, {}};
      for (size_t o = 0; o < clusters.size(); ++o) {
        if (o == c) continue;
        for (size_t i = 0; i < words[o].size(); ++i) {
          if (words[o][i].count(word)) option.outside.emplace_back(o, i);
        }
      }
      if (!option.outside.empty()) options.push_back(std::move(option));
    }
  }
  if (options.empty()) return std::nullopt;

  std::mt19937_64 rng(seed);
  const Option &pick =
      options[std::uniform_int_distribution<size_t>(0, options.size() - 1)(rng)];
  std::vector<size_t> members = pick.members;
  std::shuffle(members.begin(), members.end(), rng);
  members.resize(kIntrusionClusterPhrases);
  const auto [oc, oi] =
      pick.outside[std::uniform_int_distribution<size_t>(0, pick.outside.size() - 1)(rng)];

  IntrusionSet set;
  set.set_id = "set-" + std::to_string(seed);
  set.shared_word = pick.word;
  for (size_t i : members) set.in_cluster.push_back(clusters[pick.cluster][i]);
  set.intruder = clusters[oc][oi];
  set.shuffled = set.in_cluster;
  set.shuffled.push_back(set.intruder);
  std::vector<int> perm(set.shuffled.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> shown;
  for (size_t i = 0; i < perm.size(); ++i) {
    shown.push_back(set.shuffled[perm[i]]);
    if (perm[i] == kIntrusionClusterPhrases) set.answer_key = static_cast<int>(i);
  }
  set.shuffled = std::move(shown);
  return set;
}

bool CheckIntrusionSet(const IntrusionSet &set) {
  if (set.in_cluster.size() != kIntrusionClusterPhrases ||
      set.shuffled.size() != kIntrusionClusterPhrases + 1) {
    return false;
  }
  for (const std::string &p : set.in_cluster) {
    if (!WordSet(p).count(set.shared_word)) return false;
  }
  if (!WordSet(set.intruder).count(set.shared_word)) return false;
  if (set.answer_key < 0 || set.answer_key >= static_cast<int>(set.shuffled.size())) {
    return false;
  }
  return set.shuffled[set.answer_key] == set.intruder;
}

double CoherenceScore(std::span<const IntrusionSet> sets, std::span<const int> answers) {
  if (sets.size() != answers.size()) {
    throw ValidationError("coherence: " + std::to_string(sets.size()) + " sets vs " +
                          std::to_string(answers.size()) + " answers");
  }
  if (sets.empty()) return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < sets.size(); ++i) correct += sets[i].answer_key == answers[i];
  return double(correct) / sets.size();
}

nlohmann::json IntrusionSetToJson(const IntrusionSet &set) {
  return {{"set_id", set.set_id}, {"phrases", set.shuffled}};
}

nlohmann::json IntrusionKeyToJson(const IntrusionSet &set) {
  return {{"set_id", set.set_id},
          {"answer", set.answer_key},
          {"shared_word", set.shared_word},
          {"in_cluster", set.in_cluster},
          {"intruder", set.intruder}};
}

IntrusionSet IntrusionSetFromJson(const nlohmann::json &set, const nlohmann::json &key) {
  try {
    IntrusionSet out;
    out.set_id = set.at("set_id").get<std::string>();
    if (key.at("set_id") != out.set_id) {
      throw ValidationError("intrusion key " + key.at("set_id").dump() +
                            " does not match set " + out.set_id);
    }
    out.shuffled = set.at("phrases").get<std::vector<std::string>>();
    out.answer_key = key.at("answer").get<int>();
    out.shared_word = key.at("shared_word").get<std::string>();
    out.in_cluster = key.at("in_cluster").get<std::vector<std::string>>();
    out.intruder = key.at("intruder").get<std::string>();
    return out;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("intrusion set: ") + e.what());
  }
}

}  // namespace opsum
