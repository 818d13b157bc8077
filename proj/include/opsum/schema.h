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

#ifndef OPSUM_SCHEMA_H_
#define OPSUM_SCHEMA_H_

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace opsum {

enum class SchemaKind { kAspect, kSentiment };

std::string_view KindName(SchemaKind kind);

struct Category {
  std::string name;
  std::vector<std::string> keywords;  // case-folded
};

// User-named categories with their seed keywords. Category order defines the
// class index used by every downstream stage.
struct CategorySchema {
  SchemaKind kind = SchemaKind::kAspect;
  std::vector<Category> categories;

  int size() const { return static_cast<int>(categories.size()); }
  const std::string &name(int i) const { return categories[i].name; }
  // Index of the named category, or -1.
  int Find(std::string_view name) const;
  // Stable 64-bit FNV-1a digest over kind, names and keywords.
  uint64_t Hash() const;
  // Checks >= 2 categories, unique names, non-empty keyword lists.
  void Validate() const;
};

// Reads "name: kw1 kw2 ..." records, one per line. Blank lines and lines
// starting with '#' are ignored.
CategorySchema LoadSchema(std::istream &in, SchemaKind kind);
CategorySchema LoadSchemaFile(const std::string &path, SchemaKind kind);
void WriteSchema(const CategorySchema &schema, std::ostream &out);

}  // namespace opsum

#endif  // OPSUM_SCHEMA_H_
