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

#ifndef OPSUM_SPHERE_H_
#define OPSUM_SPHERE_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opsum/corpus.h"
#include "opsum/extraction.h"
#include "opsum/schema.h"
#include "opsum/vocab.h"

namespace opsum {

struct EmbedConfig {
  int dim = 100;
  int window = 5;
  int epochs = 20;
  double learning_rate = 0.025;
  int negatives = 5;
  uint64_t seed = 1;
  double m_inter = 0.7;
  double m_intra = 0.5;
  // Leading epochs that skip the (sentence, category) term, so the first
  // argmax assignment is made from trained rather than random sentences.
  int warmup_epochs = 1;
  // Scale on directional similarity inside the sigmoid (a von Mises-Fisher
  // style concentration). Unit-vector dot products live in [-1, 1], which
  // leaves the plain sigmoid almost linear.
  double concentration = 1.0;
  // Passes of sentence-only (sentence, word) updates before each assignment.
  int refine_iterations = 5;
  double refine_lr_scale = 4.0;
  // Learning-rate factor for category rows in negative-sampling steps. At 0
  // categories move only under the margin terms, which keeps them anchored
  // to their keywords instead of drifting toward dominant topics.
  double category_lr_scale = 0.0;
  // 0 or 1: deterministic single-threaded SGD. More: lock-free parallel
  // epochs over sentence shards, not bit-reproducible.
  int threads = 0;

  void Validate() const;
};

// Named rows of unit vectors stored contiguously.
class VectorTable {
 public:
  explicit VectorTable(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(names_.size()); }
  const std::string &name(int i) const { return names_[i]; }
  const std::vector<std::string> &names() const { return names_; }

  // Appends a zero row and returns its id. Names must be unique.
  int Add(const std::string &name);
  int Find(std::string_view name) const;

  std::span<double> row(int i) { return {data_.data() + size_t(i) * dim_, size_t(dim_)}; }
  std::span<const double> row(int i) const {
    return {data_.data() + size_t(i) * dim_, size_t(dim_)};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const VectorTable &) const = default;

 private:
  int dim_;
  std::vector<double> data_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// Joint word / sentence / category embedding on the unit sphere.
struct SphereSpace {
  int dim = 0;
  double m_inter = 0.7;
  double m_intra = 0.5;
  VectorTable words;
  VectorTable sentences;
  VectorTable categories;

  bool operator==(const SphereSpace &) const = default;

  // Text format: "dim n_words n_sents n_cats m_inter m_intra", then one row
  // per vector, "w|s|c <id> v1 ... v_dim".
  void Save(std::ostream &out) const;
  static SphereSpace Load(std::istream &in);
};

// Largest |‖v‖ - 1| over every stored vector.
double MaxNormDeviation(const SphereSpace &space);

// Scales v to unit length.
void Normalize(std::span<double> v);
double Dot(std::span<const double> a, std::span<const double> b);

// Words and sentences are sampled uniformly on the sphere from the seed; each
// category starts at the normalized mean of its keyword vectors. Throws
// ValidationError if a keyword is missing from the vocabulary.
SphereSpace InitSpace(const Vocabulary &vocab, const CategorySchema &schema,
                      std::span<const Sentence> corpus, const EmbedConfig &config);

// Word ids of each category's keywords in the space.
std::vector<std::vector<int>> KeywordIds(const SphereSpace &space,
                                         const CategorySchema &schema);

// Sum over ordered pairs i != j of min(0, 1 - a_i.a_j - m_inter).
double LossInter(const SphereSpace &space);
// Sum over categories i and keywords w of L_i of min(0, w.a_i - m_intra).
double LossIntra(const SphereSpace &space, const CategorySchema &schema);
double LossIntra(const SphereSpace &space,
                 const std::vector<std::vector<int>> &keyword_ids);

// Euclidean gradients of the minimized objective (the negated losses above).
// Buffers are laid out like the corresponding tables and are accumulated into.
struct SpaceGradient {
  std::vector<double> words;
  std::vector<double> categories;
};
SpaceGradient ZeroGradient(const SphereSpace &space);
void InterGradient(const SphereSpace &space, SpaceGradient *grad);
void IntraGradient(const SphereSpace &space,
                   const std::vector<std::vector<int>> &keyword_ids,
                   SpaceGradient *grad);

// -log sigmoid(sign * kappa * u.v); adds its gradient to grad_u and grad_v.
double SigmoidPairLoss(std::span<const double> u, std::span<const double> v,
                       double sign, double kappa, std::span<double> grad_u,
                       std::span<double> grad_v);

// -log s(u.v) - sum_k log s(-u.n_k): one positive pair plus its negatives.
// grad_negatives holds one buffer per negative.
double NegativeSamplingLoss(std::span<const double> u, std::span<const double> v,
                            const std::vector<std::span<const double>> &negatives,
                            double kappa, std::span<double> grad_u,
                            std::span<double> grad_v,
                            const std::vector<std::span<double>> &grad_negatives);

struct TrainStats {
  int epoch = 0;
  double aspect_loss = 0;   // summed negative-sampling loss over the epoch
  double inter_loss = 0;    // L_inter after the epoch (<= 0)
  double intra_loss = 0;    // L_intra after the epoch (<= 0)
  int64_t steps = 0;
  int reassigned = 0;       // sentences whose category changed this epoch
};

enum class TableKind { kWord, kSentence, kCategory };
struct VectorRef {
  TableKind table;
  int id;
};

// Called after every parameter update with the vectors it touched.
using StepObserver = std::function<void(const SphereSpace &, std::span<const VectorRef>)>;

// SGD on -L_inter - L_intra - L_aspect. The generative term uses negative
// sampling over three kinds of positive pairs: (sentence, its category),
// (sentence, word in it) and (word, context word within the window). Word
// negatives follow unigram^0.75; category negatives are drawn uniformly from
// the other categories. Each sentence is followed by one step on the margin
// terms. Every touched vector is re-projected onto the sphere.
class SphereTrainer {
 public:
  SphereTrainer(SphereSpace *space, const Vocabulary &vocab,
                const CategorySchema &schema, std::span<const Sentence> corpus,
                const EmbedConfig &config);

  // One pass over the corpus. Throws std::runtime_error on a non-finite loss.
  TrainStats TrainEpoch();

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }
  const std::vector<int> &assignment() const { return assignment_; }
  int epochs_done() const { return epoch_; }

 private:
  struct Worker;

  void Assign(TrainStats *stats);
  void RefineSentences(Worker &w);
  void TrainSentence(int s, Worker &w, TrainStats *stats);
  void MarginStep(Worker &w);
  void Step(TableKind ukind, int uid, TableKind vkind, int vid, TableKind nkind,
            std::span<const int> negatives, Worker &w, TrainStats *stats);
  std::span<double> Row(TableKind kind, int id);
  double LearningRate(int64_t sentences_done) const;

  SphereSpace *space_;
  EmbedConfig config_;
  std::vector<std::vector<int>> sentence_words_;
  std::vector<std::vector<int>> keyword_ids_;
  std::discrete_distribution<int> word_sampler_;
  bool can_sample_words_ = false;
  std::vector<int> assignment_;
  std::mt19937_64 rng_;
  StepObserver observer_;
  int epoch_ = 0;
};

// Initializes a space and runs config.epochs epochs.
SphereSpace TrainEmbedding(const Vocabulary &vocab, const CategorySchema &schema,
                           std::span<const Sentence> corpus,
                           const EmbedConfig &config,
                           std::vector<TrainStats> *history = nullptr);

// x.a_i for every category, in schema order.
std::vector<double> SentenceScores(const SphereSpace &space,
                                   std::string_view sentence_id);

// Mean of the in-vocabulary word vectors (not renormalized) dotted with each
// category vector. Throws ValidationError if no word is in the vocabulary.
std::vector<double> PhraseSimilarity(const SphereSpace &space,
                                     std::span<const std::string> words);
std::vector<double> PhraseSimilarity(const SphereSpace &space,
                                     const Phrase &phrase,
                                     const Sentence &sentence);

}  // namespace opsum

#endif  // OPSUM_SPHERE_H_
