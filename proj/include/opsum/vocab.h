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

#ifndef OPSUM_VOCAB_H_
#define OPSUM_VOCAB_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opsum/corpus.h"

namespace opsum {

using WordCounts = std::map<std::string, int64_t>;

// Case-folded counts over a shard of the corpus.
WordCounts CountWords(std::span<const Sentence> sentences);
void MergeCounts(const WordCounts &shard, WordCounts *total);

// Dense word <-> id table. Ids are ordered by descending frequency, then
// lexicographically, so identical inputs give identical ids.
class Vocabulary {
 public:
  struct Entry {
    std::string word;
    int64_t count = 0;
  };

  Vocabulary() = default;
  Vocabulary(std::vector<Entry> entries, int min_count);

  int size() const { return static_cast<int>(entries_.size()); }
  int min_count() const { return min_count_; }
  const std::string &word(int id) const { return entries_[id].word; }
  int64_t count(int id) const { return entries_[id].count; }
  const std::vector<Entry> &entries() const { return entries_; }

  // Id of the case-folded word, or -1.
  int Find(std::string_view word) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
  int min_count_ = 1;
};

// Keeps words seen at least min_count times. Every keyword is retained even
// when rare or absent (count 0).
Vocabulary BuildVocab(const WordCounts &counts, int min_count,
                      std::span<const std::string> keywords);
Vocabulary BuildVocab(std::span<const Sentence> corpus, int min_count,
                      std::span<const std::string> keywords);

}  // namespace opsum

#endif  // OPSUM_VOCAB_H_
