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

#include "opsum/extraction.h"

#include <algorithm>
#include <deque>
#include <set>

#include "opsum/parallel.h"

namespace opsum {
namespace {

std::string_view BaseRelation(std::string_view rel) {
  return rel.substr(0, rel.find(':'));
}

const ConstNode &RootClause(const ConstNode &root) {
  std::deque<const ConstNode *> queue = {&root};
  while (!queue.empty()) {
    const ConstNode *node = queue.front();
    queue.pop_front();
    if (!node->IsLeaf() && !node->label.empty() && node->label[0] == 'S') {
      return *node;
    }
    for (const ConstNode &child : node->children) queue.push_back(&child);
  }
  return root;
}

bool LabelIs(const std::string &label, std::string_view tag) {
  if (label.compare(0, tag.size(), tag) != 0) return false;
  // Accept function tags and indices: NP-SBJ, VP=2.
  return label.size() == tag.size() || label[tag.size()] == '-' ||
         label[tag.size()] == '=';
}

}  // namespace

std::string_view SourceName(PhraseSource source) {
  switch (source) {
    case PhraseSource::kDependency: return "dependency";
    case PhraseSource::kConstituency: return "constituency";
    case PhraseSource::kBoth: return "both";
  }
  return "dependency";
}

bool IsNounTag(std::string_view pos) { return pos.starts_with("NN"); }

bool IsModifierTag(std::string_view pos) {
  return pos.starts_with("JJ") || pos.starts_with("RB");
}

Phrase MakePhrase(const Sentence &sentence, std::vector<int> indices,
                  PhraseSource source) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  Phrase p;
  p.sentence_id = sentence.id;
  p.id = sentence.id + ":";
  for (size_t i = 0; i < indices.size(); ++i) {
    if (i > 0) {
      p.id += ',';
      p.surface += ' ';
    }
    p.id += std::to_string(indices[i]);
    p.surface += sentence.tokens.at(indices[i]).surface;
  }
  p.token_indices = std::move(indices);
  p.source = source;
  return p;
}

std::vector<Phrase> ExtractDependencyPhrases(const Sentence &s) {
  std::vector<Phrase> out;
  std::set<std::vector<int>> seen;
  for (const DepArc &arc : s.deps) {
    if (arc.IsRoot()) continue;
    std::string_view rel = BaseRelation(arc.relation);
    if (rel != "amod" && rel != "nsubj") continue;
    const std::string &head_pos = s.tokens[arc.head].pos;
    const std::string &dep_pos = s.tokens[arc.dependent].pos;
    int noun, modifier;
    if (IsNounTag(head_pos) && IsModifierTag(dep_pos)) {
      noun = arc.head;
      modifier = arc.dependent;
    } else if (IsNounTag(dep_pos) && IsModifierTag(head_pos)) {
      noun = arc.dependent;
      modifier = arc.head;
    } else {
      continue;
    }
    std::vector<int> indices = {noun, modifier};
    for (const DepArc &c : s.deps) {
      if (!c.IsRoot() && c.head == noun && BaseRelation(c.relation) == "compound") {
        indices.push_back(c.dependent);
      }
    }
    Phrase p = MakePhrase(s, std::move(indices), PhraseSource::kDependency);
    if (seen.insert(p.token_indices).second) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Phrase> ExtractConstituencyPhrases(const Sentence &s) {
  std::vector<Phrase> out;
  if (!s.tree) return out;
  const ConstNode &clause = RootClause(*s.tree);
  const auto &kids = clause.children;
  for (size_t i = 0; i + 1 < kids.size(); ++i) {
    if (!LabelIs(kids[i].label, "NP") || !LabelIs(kids[i + 1].label, "VP")) {
      continue;
    }
    std::vector<int> indices;
    bool has_noun = false;
    for (int t = kids[i].start; t < kids[i + 1].end; ++t) {
      indices.push_back(t);
      has_noun = has_noun || IsNounTag(s.tokens[t].pos);
    }
    if (has_noun) {
      out.push_back(MakePhrase(s, std::move(indices), PhraseSource::kConstituency));
    }
  }
  return out;
}

std::vector<Phrase> ExtractCandidates(const Sentence &s) {
  std::vector<Phrase> out = ExtractDependencyPhrases(s);
  for (Phrase &p : ExtractConstituencyPhrases(s)) {
    auto it = std::find_if(out.begin(), out.end(), [&p](const Phrase &q) {
      return q.token_indices == p.token_indices;
    });
    if (it != out.end()) {
      it->source = PhraseSource::kBoth;
    } else {
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Phrase> ExtractCorpus(std::span<const Sentence> corpus, int threads) {
  std::vector<std::vector<Phrase>> per_sentence(corpus.size());
  ParallelFor(corpus.size(), threads, [&](size_t i) {
    per_sentence[i] = ExtractCandidates(corpus[i]);
  });
  std::vector<Phrase> out;
  for (auto &phrases : per_sentence) {
    for (Phrase &p : phrases) out.push_back(std::move(p));
  }
  return out;
}

nlohmann::json PhraseToJson(const Phrase &p) {
  return {{"id", p.id},
          {"sentence_id", p.sentence_id},
          {"indices", p.token_indices},
          {"surface", p.surface},
          {"source", SourceName(p.source)}};
}

Phrase PhraseFromJson(const nlohmann::json &j) {
  Phrase p;
  p.id = j.at("id").get<std::string>();
  p.sentence_id = j.at("sentence_id").get<std::string>();
  p.token_indices = j.at("indices").get<std::vector<int>>();
  p.surface = j.at("surface").get<std::string>();
  std::string source = j.at("source").get<std::string>();
  if (source == "dependency") {
    p.source = PhraseSource::kDependency;
  } else if (source == "constituency") {
    p.source = PhraseSource::kConstituency;
  } else if (source == "both") {
    p.source = PhraseSource::kBoth;
  } else {
    throw ParseError("phrase " + p.id + ": unknown source '" + source + "'");
  }
  if (p.token_indices.empty()) throw ParseError("phrase " + p.id + ": no tokens");
  return p;
}

void WritePhrases(std::span<const Phrase> phrases, std::ostream &out) {
  for (const Phrase &p : phrases) out << PhraseToJson(p).dump() << "\n";
}

std::vector<Phrase> ReadPhrases(std::istream &in) {
  std::vector<Phrase> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(PhraseFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception &e) {
      throw ParseError("phrases line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace opsum
