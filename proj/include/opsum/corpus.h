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

#ifndef OPSUM_CORPUS_H_
#define OPSUM_CORPUS_H_

#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace opsum {

// Raised for malformed input files (CoNLL-U, trees, schemas, manifests).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a configuration or an input violates a documented contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  int index = 0;
  std::string surface;
  std::string pos;

  bool operator==(const Token &) const = default;
};

// A dependency arc. Root attachments (HEAD=0 in CoNLL-U) keep head == kRoot
// and are never matched by the extraction rules.
struct DepArc {
  static constexpr int kRoot = -1;

  int head = kRoot;
  int dependent = 0;
  std::string relation;

  bool IsRoot() const { return head == kRoot; }
  bool operator==(const DepArc &) const = default;
};

// Constituency node covering tokens [start, end). Preterminals are leaves
// with a span of exactly one token; their label is the POS tag.
struct ConstNode {
  std::string label;
  int start = 0;
  int end = 0;
  std::vector<ConstNode> children;

  bool IsLeaf() const { return children.empty(); }
  int size() const { return end - start; }
  bool operator==(const ConstNode &) const = default;
};

struct Sentence {
  std::string id;
  std::string target_id;
  std::string review_id;
  std::vector<Token> tokens;
  std::vector<DepArc> deps;
  std::optional<ConstNode> tree;

  int size() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence &) const = default;
};

// Reads CoNLL-U. Ids come from '# sent_id', '# review_id' and '# target_id'
// comments; missing sentence ids are numbered "s1", "s2", ... in stream order
// and missing review/target ids inherit the previous sentence's value (or
// "r0"/"t0" at the start of the stream). Multiword ranges ("1-2") and empty
// nodes ("1.1") are skipped.
std::vector<Sentence> ParseConllu(std::istream &in);
std::vector<Sentence> ParseConlluString(std::string_view text);

// Writes sentences back in CoNLL-U. The POS tag goes to XPOS; UPOS is "_".
void WriteConllu(const std::vector<Sentence> &sentences, std::ostream &out);

// Parses one Penn-Treebank bracketed tree, e.g. "(NP (DT the) (NN sauce))".
// An outer node with an empty label, as in "( (S ...) )", is labelled ROOT.
ConstNode ParseBracketedTree(std::string_view text);

// Inverse of ParseBracketedTree given the sentence tokens for the leaves.
std::string FormatBracketedTree(const ConstNode &tree,
                                const std::vector<Token> &tokens);

// Attaches one tree per line to the sentences, aligned by order. Blank lines
// are skipped. The number of trees must equal the number of sentences and
// each tree must have exactly one leaf per token.
void AttachTrees(std::istream &trees, std::vector<Sentence> &sentences);

// Checks structural invariants (contiguous token indices, valid arcs, tree
// spans partitioning their parents). Throws ValidationError.
void ValidateSentence(const Sentence &sentence);

// Line-delimited JSON manifest, one sentence per line.
nlohmann::json SentenceToJson(const Sentence &sentence);
Sentence SentenceFromJson(const nlohmann::json &j);
void WriteManifest(const std::vector<Sentence> &sentences, std::ostream &out);
std::vector<Sentence> ReadManifest(std::istream &in);

// Lower-cases ASCII letters. Review text is folded before vocabulary and
// keyword matching; surfaces are kept as-is for display.
std::string FoldCase(std::string_view word);

// Splits on ASCII whitespace.
std::vector<std::string> SplitWhitespace(std::string_view text);

}  // namespace opsum

#endif  // OPSUM_CORPUS_H_
