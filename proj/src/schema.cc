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

#include "opsum/schema.h"

#include <fstream>
#include <set>

#include "opsum/corpus.h"

namespace opsum {

std::string_view KindName(SchemaKind kind) {
  return kind == SchemaKind::kAspect ? "aspect" : "sentiment";
}

int CategorySchema::Find(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (categories[i].name == name) return i;
  }
  return -1;
}

uint64_t CategorySchema::Hash() const {
  uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  mix(KindName(kind));
  for (const Category &c : categories) {
    mix(c.name);
    for (const std::string &k : c.keywords) mix(k);
  }
  return h;
}

void CategorySchema::Validate() const {
  if (categories.size() < 2) {
    throw ValidationError("schema needs at least 2 categories, found " +
                          std::to_string(categories.size()));
  }
  std::set<std::string> names;
  for (const Category &c : categories) {
    if (c.name.empty()) throw ValidationError("schema: empty category name");
    if (!names.insert(c.name).second) {
      throw ValidationError("schema: duplicate category '" + c.name + "'");
    }
    if (c.keywords.empty()) {
      throw ValidationError("schema: category '" + c.name + "' has no keywords");
    }
    for (const std::string &k : c.keywords) {
      if (k.empty()) throw ValidationError("schema: empty keyword in '" + c.name + "'");
    }
  }
}

CategorySchema LoadSchema(std::istream &in, SchemaKind kind) {
  CategorySchema schema;
  schema.kind = kind;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> words = SplitWhitespace(line);
    if (words.empty() || words[0][0] == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos) {
      throw ParseError("schema line " + std::to_string(line_no) +
                       ": expected 'name: keywords'");
    }
    std::vector<std::string> name = SplitWhitespace(line.substr(0, colon));
    if (name.size() != 1) {
      throw ParseError("schema line " + std::to_string(line_no) +
                       ": category name must be one word");
    }
    Category category;
    category.name = name[0];
    for (const std::string &k : SplitWhitespace(line.substr(colon + 1))) {
      category.keywords.push_back(FoldCase(k));
    }
    schema.categories.push_back(std::move(category));
  }
  schema.Validate();
  return schema;
}

CategorySchema LoadSchemaFile(const std::string &path, SchemaKind kind) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file " + path);
  return LoadSchema(in, kind);
}

void WriteSchema(const CategorySchema &schema, std::ostream &out) {
  for (const Category &c : schema.categories) {
    out << c.name << ":";
    for (const std::string &k : c.keywords) out << ' ' << k;
    out << "\n";
  }
}

}  // namespace opsum
