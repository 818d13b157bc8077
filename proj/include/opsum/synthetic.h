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

#ifndef OPSUM_SYNTHETIC_H_
#define OPSUM_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "opsum/corpus.h"
#include "opsum/schema.h"

namespace opsum {

// Shape of a planted review corpus. Every sentence is about one aspect and
// one polarity: its nouns come from the aspect's vocabulary and its
// adjectives from the polarity's vocabulary, except that each content word
// is swapped for a shared noise word with probability noise_word_ratio.
struct SyntheticSpec {
  int n_categories = 2;
  int vocab_per_category = 30;
  int n_sentences = 2000;
  int min_length = 5;
  int max_length = 14;
  int keywords_per_category = 4;
  double noise_word_ratio = 0.05;
  int n_sentiments = 2;
  int n_targets = 4;
  int sentences_per_review = 5;

  void Validate() const;
};

struct SyntheticCorpus {
  std::vector<Sentence> sentences;  // with trees attached
  CategorySchema aspects;
  CategorySchema sentiments;
  std::vector<int> gold_aspect;     // per sentence, index into aspects
  std::vector<int> gold_sentiment;  // per sentence, index into sentiments
  std::vector<std::vector<std::string>> aspect_vocab;
  std::vector<std::vector<std::string>> sentiment_vocab;
  std::vector<std::string> noise_vocab;
};

SyntheticCorpus GenerateSynthetic(const SyntheticSpec &spec, uint64_t seed);

// Writes corpus.conllu, corpus.trees, aspects.txt, sentiments.txt,
// gold_sentences.jsonl and gold_phrases.jsonl into dir. Every candidate
// phrase inherits the gold labels of its sentence.
void WriteSynthetic(const SyntheticCorpus &corpus, const std::string &dir);

}  // namespace opsum

#endif  // OPSUM_SYNTHETIC_H_
