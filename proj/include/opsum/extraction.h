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

#ifndef OPSUM_EXTRACTION_H_
#define OPSUM_EXTRACTION_H_

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "opsum/corpus.h"

namespace opsum {

enum class PhraseSource { kDependency, kConstituency, kBoth };

std::string_view SourceName(PhraseSource source);

// A candidate opinion phrase: a set of token positions within one sentence.
struct Phrase {
  std::string id;
  std::string sentence_id;
  std::vector<int> token_indices;  // ascending
  std::string surface;
  PhraseSource source = PhraseSource::kDependency;

  bool operator==(const Phrase &) const = default;
};

// POS predicates on Penn tags.
bool IsNounTag(std::string_view pos);
bool IsModifierTag(std::string_view pos);

// Builds a phrase over the given indices (sorted and deduplicated here).
// The id is "<sentence_id>:<i1>,<i2>,...".
Phrase MakePhrase(const Sentence &sentence, std::vector<int> indices,
                  PhraseSource source);

// Noun + adjective/adverb pairs joined by a one-hop amod or nsubj arc, in
// either direction. The noun's compound dependents are included.
std::vector<Phrase> ExtractDependencyPhrases(const Sentence &sentence);

// Each NP child of the root clause that is immediately followed by a VP
// sibling yields the NP+VP span. The root clause is the top-most node whose
// label starts with 'S' (the tree root when there is none). Spans without a
// noun-tagged token are dropped.
std::vector<Phrase> ExtractConstituencyPhrases(const Sentence &sentence);

// Union of both rules, deduplicated by index set. Dependency phrases come
// first; an index set found by both rules is tagged kBoth.
std::vector<Phrase> ExtractCandidates(const Sentence &sentence);

// Runs ExtractCandidates over a corpus. threads <= 1 runs inline; the output
// order is the corpus order either way.
std::vector<Phrase> ExtractCorpus(std::span<const Sentence> corpus,
                                  int threads = 0);

nlohmann::json PhraseToJson(const Phrase &phrase);
Phrase PhraseFromJson(const nlohmann::json &j);
void WritePhrases(std::span<const Phrase> phrases, std::ostream &out);
std::vector<Phrase> ReadPhrases(std::istream &in);

}  // namespace opsum

#endif  // OPSUM_EXTRACTION_H_
