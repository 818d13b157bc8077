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

#include "opsum/corpus.h"

#include <cctype>
#include <charconv>
#include <sstream>

namespace opsum {
namespace {

bool ParseInt(std::string_view text, int *value) {
  if (text.empty()) return false;
  const char *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, *value);
  return ec == std::errc() && ptr == end;
}

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> SplitColumns(const std::string &line) {
  std::vector<std::string> cols;
  if (line.find('\t') == std::string::npos) return SplitWhitespace(line);
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

struct PendingSentence {
  std::string id, review_id, target_id;
  std::vector<Token> tokens;
  std::vector<std::pair<int, std::string>> heads;  // raw HEAD, DEPREL
  int first_line = 0;

  bool empty() const { return tokens.empty(); }
};

class ConlluReader {
 public:
  std::vector<Sentence> Read(std::istream &in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (Trim(line).empty()) {
        Flush();
        continue;
      }
      if (line[0] == '#') {
        Comment(line);
        continue;
      }
      TokenLine(line, line_no);
    }
    Flush();
    return std::move(out_);
  }

 private:
  void Comment(const std::string &line) {
    size_t eq = line.find('=');
    if (eq == std::string::npos) return;
    std::string key = Trim(std::string_view(line).substr(1, eq - 1));
    std::string value = Trim(std::string_view(line).substr(eq + 1));
    if (key == "sent_id") {
      cur_.id = value;
    } else if (key == "review_id") {
      cur_.review_id = value;
    } else if (key == "target_id") {
      cur_.target_id = value;
    }
  }

  void TokenLine(const std::string &line, int line_no) {
    std::vector<std::string> cols = SplitColumns(line);
    if (cols.size() != 10) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 10 columns, found " +
                       std::to_string(cols.size()));
    }
    const std::string &id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) {
      return;
    }
    int index;
    if (!ParseInt(id, &index) ||
        index != static_cast<int>(cur_.tokens.size()) + 1) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": bad token id '" + id + "'");
    }
    if (cols[1].empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty FORM");
    }
    if (cur_.tokens.empty()) cur_.first_line = line_no;
    Token token;
    token.index = index - 1;
    token.surface = cols[1];
    token.pos = cols[4] != "_" ? cols[4] : cols[3];
    cur_.tokens.push_back(std::move(token));

    int head = -2;  // no arc
    if (cols[6] != "_") {
      if (!ParseInt(cols[6], &head) || head < 0) {
        throw ParseError("line " + std::to_string(line_no) + ": bad HEAD '" +
                         cols[6] + "'");
      }
      if (head == index) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": token is its own head");
      }
    }
    cur_.heads.emplace_back(head, cols[7]);
  }

  void Flush() {
    if (cur_.empty()) {
      // Comments without tokens still carry ids forward.
      if (!cur_.review_id.empty()) last_review_ = cur_.review_id;
      if (!cur_.target_id.empty()) last_target_ = cur_.target_id;
      cur_ = PendingSentence();
      return;
    }
    ++count_;
    Sentence s;
    s.id = cur_.id.empty() ? "s" + std::to_string(count_) : cur_.id;
    if (!cur_.review_id.empty()) last_review_ = cur_.review_id;
    if (!cur_.target_id.empty()) last_target_ = cur_.target_id;
    s.review_id = last_review_;
    s.target_id = last_target_;
    s.tokens = std::move(cur_.tokens);
    const int n = static_cast<int>(s.tokens.size());
    for (int i = 0; i < n; ++i) {
      auto &[head, rel] = cur_.heads[i];
      if (head == -2) continue;
      if (head > n) {
        throw ParseError("sentence " + s.id + ": dangling HEAD " +
                         std::to_string(head) + " on token " +
                         std::to_string(i + 1));
      }
      DepArc arc;
      arc.head = head == 0 ? DepArc::kRoot : head - 1;
      arc.dependent = i;
      arc.relation = rel;
      s.deps.push_back(std::move(arc));
    }
    out_.push_back(std::move(s));
    cur_ = PendingSentence();
  }

  std::vector<Sentence> out_;
  PendingSentence cur_;
  std::string last_review_ = "r0";
  std::string last_target_ = "t0";
  int count_ = 0;
};

// Recursive-descent reader for bracketed trees.
class TreeReader {
 public:
  explicit TreeReader(std::string_view text) : text_(text) {}

  ConstNode Read() {
    SkipSpace();
    if (pos_ >= text_.size()) Fail("empty tree");
    ConstNode root = Node();
    SkipSpace();
    if (pos_ != text_.size()) Fail("trailing characters after tree");
    if (root.label.empty()) root.label = "ROOT";
    return root;
  }

 private:
  [[noreturn]] void Fail(const std::string &what) const {
    throw ParseError("tree: " + what + " at offset " + std::to_string(pos_));
  }

  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string Atom() {
    size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  ConstNode Node() {
    if (pos_ >= text_.size() || text_[pos_] != '(') {
      Fail("unbalanced parentheses, expected '('");
    }
    const size_t open = pos_;
    ++pos_;
    SkipSpace();
    ConstNode node;
    node.label = Atom();
    node.start = leaves_;
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')') {
      Atom();  // the word of a preterminal
      ++leaves_;
    } else {
      while (true) {
        SkipSpace();
        if (pos_ >= text_.size() || text_[pos_] != '(') break;
        node.children.push_back(Node());
      }
    }
    SkipSpace();
    if (pos_ >= text_.size()) Fail("unbalanced parentheses, missing ')'");
    if (text_[pos_] != ')') Fail("unexpected character");
    ++pos_;
    node.end = leaves_;
    if (node.start == node.end) {
      pos_ = open;
      Fail("empty constituent");
    }
    return node;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int leaves_ = 0;
};

std::string EscapeLeaf(const std::string &word) {
  if (word == "(") return "-LRB-";
  if (word == ")") return "-RRB-";
  std::string out;
  for (char c : word) {
    if (c == '(') {
      out += "-LRB-";
    } else if (c == ')') {
      out += "-RRB-";
    } else {
      out += c;
    }
  }
  return out;
}

void FormatNode(const ConstNode &node, const std::vector<Token> &tokens,
                std::string *out) {
  *out += '(';
  *out += node.label;
  if (node.IsLeaf()) {
    *out += ' ';
    *out += EscapeLeaf(tokens.at(node.start).surface);
  } else {
    for (const ConstNode &child : node.children) {
      *out += ' ';
      FormatNode(child, tokens, out);
    }
  }
  *out += ')';
}

void ValidateNode(const ConstNode &node, const std::string &sid) {
  if (node.IsLeaf()) {
    if (node.size() != 1) {
      throw ValidationError("sentence " + sid + ": leaf span of length " +
                            std::to_string(node.size()));
    }
    return;
  }
  int cursor = node.start;
  for (const ConstNode &child : node.children) {
    if (child.start != cursor || child.end <= child.start) {
      throw ValidationError("sentence " + sid + ": child spans of " +
                            node.label + " do not partition its span");
    }
    cursor = child.end;
    ValidateNode(child, sid);
  }
  if (cursor != node.end) {
    throw ValidationError("sentence " + sid + ": child spans of " +
                          node.label + " do not cover its span");
  }
}

}  // namespace

std::string FoldCase(std::string_view word) {
  std::string out(word);
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<Sentence> ParseConllu(std::istream &in) {
  return ConlluReader().Read(in);
}

std::vector<Sentence> ParseConlluString(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ParseConllu(in);
}

void WriteConllu(const std::vector<Sentence> &sentences, std::ostream &out) {
  for (const Sentence &s : sentences) {
    out << "# sent_id = " << s.id << "\n";
    out << "# review_id = " << s.review_id << "\n";
    out << "# target_id = " << s.target_id << "\n";
    std::vector<const DepArc *> arc_of(s.tokens.size(), nullptr);
    for (const DepArc &arc : s.deps) {
      if (arc_of[arc.dependent] == nullptr) arc_of[arc.dependent] = &arc;
    }
    for (const Token &t : s.tokens) {
      const DepArc *arc = arc_of[t.index];
      out << t.index + 1 << '\t' << t.surface << "\t_\t_\t"
          << (t.pos.empty() ? "_" : t.pos) << "\t_\t";
      if (arc == nullptr) {
        out << "_\t_";
      } else {
        out << (arc->IsRoot() ? 0 : arc->head + 1) << '\t' << arc->relation;
      }
      out << "\t_\t_\n";
    }
    out << "\n";
  }
}

ConstNode ParseBracketedTree(std::string_view text) {
  return TreeReader(text).Read();
}

std::string FormatBracketedTree(const ConstNode &tree,
                                const std::vector<Token> &tokens) {
  std::string out;
  FormatNode(tree, tokens, &out);
  return out;
}

void AttachTrees(std::istream &trees, std::vector<Sentence> &sentences) {
  std::string line;
  size_t next = 0;
  int line_no = 0;
  while (std::getline(trees, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    if (next >= sentences.size()) {
      throw ParseError("trees line " + std::to_string(line_no) +
                       ": more trees than sentences");
    }
    Sentence &s = sentences[next++];
    ConstNode tree;
    try {
      tree = ParseBracketedTree(line);
    } catch (const ParseError &e) {
      throw ParseError("trees line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (tree.end != s.size()) {
      throw ParseError("trees line " + std::to_string(line_no) + ": tree has " +
                       std::to_string(tree.end) + " leaves but sentence " +
                       s.id + " has " + std::to_string(s.size()) + " tokens");
    }
    s.tree = std::move(tree);
  }
  if (next != sentences.size()) {
    throw ParseError("trees: " + std::to_string(next) + " trees for " +
                     std::to_string(sentences.size()) + " sentences");
  }
}

void ValidateSentence(const Sentence &s) {
  const int n = s.size();
  for (int i = 0; i < n; ++i) {
    if (s.tokens[i].index != i) {
      throw ValidationError("sentence " + s.id + ": token indices not contiguous");
    }
    if (s.tokens[i].surface.empty()) {
      throw ValidationError("sentence " + s.id + ": empty token surface");
    }
  }
  for (const DepArc &arc : s.deps) {
    bool head_ok = arc.IsRoot() || (arc.head >= 0 && arc.head < n);
    if (!head_ok || arc.dependent < 0 || arc.dependent >= n ||
        arc.head == arc.dependent) {
      throw ValidationError("sentence " + s.id + ": invalid arc");
    }
  }
  if (s.tree) {
    if (s.tree->start != 0 || s.tree->end != n) {
      throw ValidationError("sentence " + s.id +
                            ": tree does not cover the sentence");
    }
    ValidateNode(*s.tree, s.id);
  }
}

nlohmann::json SentenceToJson(const Sentence &s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["target_id"] = s.target_id;
  j["review_id"] = s.review_id;
  auto tokens = nlohmann::json::array();
  for (const Token &t : s.tokens) tokens.push_back({t.surface, t.pos});
  j["tokens"] = std::move(tokens);
  auto deps = nlohmann::json::array();
  for (const DepArc &a : s.deps) deps.push_back({a.head, a.dependent, a.relation});
  j["deps"] = std::move(deps);
  if (s.tree) {
    j["tree"] = FormatBracketedTree(*s.tree, s.tokens);
  } else {
    j["tree"] = nullptr;
  }
  return j;
}

Sentence SentenceFromJson(const nlohmann::json &j) {
  Sentence s;
  s.id = j.at("id").get<std::string>();
  s.target_id = j.at("target_id").get<std::string>();
  s.review_id = j.at("review_id").get<std::string>();
  int index = 0;
  for (const auto &t : j.at("tokens")) {
    s.tokens.push_back({index++, t.at(0).get<std::string>(),
                        t.at(1).get<std::string>()});
  }
  for (const auto &a : j.at("deps")) {
    s.deps.push_back({a.at(0).get<int>(), a.at(1).get<int>(),
                      a.at(2).get<std::string>()});
  }
  if (j.contains("tree") && !j["tree"].is_null()) {
    s.tree = ParseBracketedTree(j["tree"].get<std::string>());
  }
  ValidateSentence(s);
  return s;
}

void WriteManifest(const std::vector<Sentence> &sentences, std::ostream &out) {
  for (const Sentence &s : sentences) out << SentenceToJson(s).dump() << "\n";
}

std::vector<Sentence> ReadManifest(std::istream &in) {
  std::vector<Sentence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      out.push_back(SentenceFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception &e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return out;
}

}  // namespace opsum
