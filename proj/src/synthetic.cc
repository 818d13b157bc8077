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

#include "opsum/synthetic.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "opsum/extraction.h"
#include "opsum/io.h"

namespace opsum {
namespace {

const char *kAspectNames[] = {"food", "service", "ambience", "location",
                              "drinks", "price", "staff", "menu"};
const char *kSentimentNames[] = {"good", "bad", "mixed", "neutral"};

// Pronounceable pseudo-words, unique across the whole corpus.
class WordMaker {
 public:
  explicit WordMaker(std::mt19937_64 *rng) : rng_(rng) {
    taken_ = {"the", "was", "with", "and"};
  }

  std::string Next() {
    static const char kOnsets[] = "bdfgklmnprstvz";
    static const char kVowels[] = "aeiou";
    std::uniform_int_distribution<int> onset(0, 13), vowel(0, 4), syllables(2, 3);
    while (true) {
      std::string w;
      int n = syllables(*rng_);
      for (int i = 0; i < n; ++i) {
        w += kOnsets[onset(*rng_)];
        w += kVowels[vowel(*rng_)];
      }
      if (taken_.insert(w).second) return w;
    }
  }

 private:
  std::mt19937_64 *rng_;
  std::set<std::string> taken_;
};

struct Builder {
  std::vector<Token> tokens;
  std::vector<DepArc> deps;

  int Add(const std::string &word, const std::string &pos) {
    int i = static_cast<int>(tokens.size());
    tokens.push_back({i, word, pos});
    return i;
  }
  void Arc(int head, int dep, const char *rel) { deps.push_back({head, dep, rel}); }
};

}  // namespace

void SyntheticSpec::Validate() const {
  if (n_categories < 2 || n_sentiments < 2) {
    throw ValidationError("synthetic corpus needs >= 2 aspects and sentiments");
  }
  if (keywords_per_category < 1 || keywords_per_category > vocab_per_category) {
    throw ValidationError("keyword count must be in [1, vocab_per_category]");
  }
  if (min_length < 4 || max_length < min_length) {
    throw ValidationError("sentence length range must satisfy 4 <= min <= max");
  }
  if (n_sentences < 0 || n_targets < 1 || sentences_per_review < 1) {
    throw ValidationError("bad synthetic corpus size");
  }
  if (!(noise_word_ratio >= 0 && noise_word_ratio <= 1)) {
    throw ValidationError("noise_word_ratio must be in [0, 1]");
  }
}

SyntheticCorpus GenerateSynthetic(const SyntheticSpec &spec, uint64_t seed) {
  spec.Validate();
  std::mt19937_64 rng(seed);
  WordMaker maker(&rng);
  SyntheticCorpus out;

  auto make_schema = [&](SchemaKind kind, int n, const char *const *names,
                         int n_names, std::vector<std::vector<std::string>> *vocab) {
    CategorySchema schema;
    schema.kind = kind;
    for (int c = 0; c < n; ++c) {
      auto &words = vocab->emplace_back();
      for (int i = 0; i < spec.vocab_per_category; ++i) words.push_back(maker.Next());
      Category category;
      category.name = c < n_names ? names[c]
                                  : std::string(KindName(kind)) + std::to_string(c);
      category.keywords.assign(words.begin(),
                               words.begin() + spec.keywords_per_category);
      schema.categories.push_back(std::move(category));
    }
    return schema;
  };
  out.aspects = make_schema(SchemaKind::kAspect, spec.n_categories, kAspectNames, 8,
                            &out.aspect_vocab);
  out.sentiments = make_schema(SchemaKind::kSentiment, spec.n_sentiments,
                               kSentimentNames, 4, &out.sentiment_vocab);
  std::vector<std::string> noise_nouns, noise_adjs;
  for (int i = 0; i < 10; ++i) noise_nouns.push_back(maker.Next());
  for (int i = 0; i < 10; ++i) noise_adjs.push_back(maker.Next());
  out.noise_vocab = noise_nouns;
  out.noise_vocab.insert(out.noise_vocab.end(), noise_adjs.begin(), noise_adjs.end());

  std::uniform_int_distribution<int> pick_aspect(0, spec.n_categories - 1);
  std::uniform_int_distribution<int> pick_sentiment(0, spec.n_sentiments - 1);
  std::uniform_int_distribution<int> pick_word(0, spec.vocab_per_category - 1);
  std::uniform_int_distribution<int> pick_noise(0, 9);
  std::uniform_int_distribution<int> pick_length(spec.min_length, spec.max_length);
  std::bernoulli_distribution noisy(spec.noise_word_ratio);
  std::bernoulli_distribution coin(0.5);

  for (int s = 0; s < spec.n_sentences; ++s) {
    int aspect = pick_aspect(rng), polarity = pick_sentiment(rng);
    auto noun = [&] {
      return noisy(rng) ? noise_nouns[pick_noise(rng)]
                        : out.aspect_vocab[aspect][pick_word(rng)];
    };
    auto adj = [&] {
      return noisy(rng) ? noise_adjs[pick_noise(rng)]
                        : out.sentiment_vocab[polarity][pick_word(rng)];
    };

    // Length = base clause (4 or 5 tokens) + 3 per modifier group.
    int length = pick_length(rng);
    int groups = std::max(0, (length - 4) / 3);
    bool compound = (length - 4 - 3 * groups) > 0 || coin(rng);
    if (4 + (compound ? 1 : 0) + 3 * groups > spec.max_length) compound = false;

    Builder b;
    std::string tree = "(S (NP ";
    int det = b.Add("the", "DT");
    tree += "(DT the) ";
    int mod_noun = -1;
    if (compound) {
      std::string w = noun();
      mod_noun = b.Add(w, "NN");
      tree += "(NN " + w + ") ";
    }
    std::string subj_word = noun();
    int subj = b.Add(subj_word, "NN");
    tree += "(NN " + subj_word + ")) (VP ";
    int cop = b.Add("was", "VBD");
    std::string pred_word = adj();
    int pred = b.Add(pred_word, "JJ");
    tree += "(VBD was) (ADJP (JJ " + pred_word + "))";
    b.Arc(subj, det, "det");
    if (mod_noun >= 0) b.Arc(subj, mod_noun, "compound");
    b.Arc(pred, subj, "nsubj");
    b.Arc(pred, cop, "cop");
    b.Arc(DepArc::kRoot, pred, "root");

    int first_obj = -1;
    std::vector<std::string> np_parts;
    for (int g = 0; g < groups; ++g) {
      const char *fn = g == 0 ? "with" : "and";
      int f = b.Add(fn, g == 0 ? "IN" : "CC");
      std::string a = adj(), n = noun();
      int ai = b.Add(a, "JJ");
      int ni = b.Add(n, "NN");
      b.Arc(ni, ai, "amod");
      if (g == 0) {
        b.Arc(ni, f, "case");
        b.Arc(pred, ni, "obl");
        first_obj = ni;
      } else {
        b.Arc(ni, f, "cc");
        b.Arc(first_obj, ni, "conj");
        np_parts.push_back("(CC and)");
      }
      np_parts.push_back("(NP (JJ " + a + ") (NN " + n + "))");
    }
    if (groups == 1) {
      tree += " (PP (IN with) " + np_parts[0] + ")";
    } else if (groups > 1) {
      tree += " (PP (IN with) (NP";
      for (const std::string &part : np_parts) tree += " " + part;
      tree += "))";
    }
    tree += "))";

    Sentence sentence;
    int review = s / spec.sentences_per_review;
    sentence.id = "s" + std::to_string(s);
    sentence.review_id = "r" + std::to_string(review);
    sentence.target_id = "t" + std::to_string(review % spec.n_targets);
    sentence.tokens = std::move(b.tokens);
    std::sort(b.deps.begin(), b.deps.end(),
              [](const DepArc &x, const DepArc &y) { return x.dependent < y.dependent; });
    sentence.deps = std::move(b.deps);
    sentence.tree = ParseBracketedTree(tree);
    ValidateSentence(sentence);
    out.sentences.push_back(std::move(sentence));
    out.gold_aspect.push_back(aspect);
    out.gold_sentiment.push_back(polarity);
  }
  return out;
}

void WriteSynthetic(const SyntheticCorpus &corpus, const std::string &dir) {
  std::filesystem::create_directories(dir);
  auto path = [&dir](const char *name) { return (std::filesystem::path(dir) / name).string(); };
  WriteFileAtomic(path("corpus.conllu"), [&](std::ostream &out) {
    WriteConllu(corpus.sentences, out);
  });
  WriteFileAtomic(path("corpus.trees"), [&](std::ostream &out) {
    for (const Sentence &s : corpus.sentences) {
      out << FormatBracketedTree(*s.tree, s.tokens) << "\n";
    }
  });
  WriteFileAtomic(path("aspects.txt"), [&](std::ostream &out) { WriteSchema(corpus.aspects, out); });
  WriteFileAtomic(path("sentiments.txt"), [&](std::ostream &out) {
    WriteSchema(corpus.sentiments, out);
  });
  WriteFileAtomic(path("gold_sentences.jsonl"), [&](std::ostream &out) {
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
      nlohmann::json j = {{"id", corpus.sentences[i].id},
                          {"aspect", corpus.aspects.name(corpus.gold_aspect[i])},
                          {"sentiment", corpus.sentiments.name(corpus.gold_sentiment[i])}};
      out << j.dump() << "\n";
    }
  });
  WriteFileAtomic(path("gold_phrases.jsonl"), [&](std::ostream &out) {
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
      for (const Phrase &p : ExtractCandidates(corpus.sentences[i])) {
        nlohmann::json j = {{"id", p.id},
                            {"aspect", corpus.aspects.name(corpus.gold_aspect[i])},
                            {"sentiment", corpus.sentiments.name(corpus.gold_sentiment[i])}};
        out << j.dump() << "\n";
      }
    }
  });
}

}  // namespace opsum
