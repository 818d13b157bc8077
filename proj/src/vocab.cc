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

#include "opsum/vocab.h"

#include <algorithm>

namespace opsum {

WordCounts CountWords(std::span<const Sentence> sentences) {
  WordCounts counts;
  for (const Sentence &s : sentences) {
    for (const Token &t : s.tokens) ++counts[FoldCase(t.surface)];
  }
  return counts;
}

void MergeCounts(const WordCounts &shard, WordCounts *total) {
  for (const auto &[word, count] : shard) (*total)[word] += count;
}

Vocabulary::Vocabulary(std::vector<Entry> entries, int min_count)
    : entries_(std::move(entries)), min_count_(min_count) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry &a, const Entry &b) {
              if (a.count != b.count) return a.count > b.count;
              return a.word < b.word;
            });
  for (int i = 0; i < size(); ++i) index_.emplace(entries_[i].word, i);
}

int Vocabulary::Find(std::string_view word) const {
  auto it = index_.find(FoldCase(word));
  return it == index_.end() ? -1 : it->second;
}

Vocabulary BuildVocab(const WordCounts &counts, int min_count,
                      std::span<const std::string> keywords) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  std::map<std::string, int64_t> kept;
  for (const auto &[word, count] : counts) {
    if (count >= min_count) kept[word] = count;
  }
  for (const std::string &k : keywords) {
    std::string folded = FoldCase(k);
    auto it = counts.find(folded);
    kept[folded] = it == counts.end() ? 0 : it->second;
  }
  std::vector<Vocabulary::Entry> entries;
  entries.reserve(kept.size());
  for (auto &[word, count] : kept) entries.push_back({word, count});
  return Vocabulary(std::move(entries), min_count);
}

Vocabulary BuildVocab(std::span<const Sentence> corpus, int min_count,
                      std::span<const std::string> keywords) {
  return BuildVocab(CountWords(corpus), min_count, keywords);
}

}  // namespace opsum
