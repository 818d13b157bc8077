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

#ifndef OPSUM_CLASSIFIER_H_
#define OPSUM_CLASSIFIER_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "opsum/corpus.h"
#include "opsum/distill.h"
#include "opsum/extraction.h"

namespace opsum {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A full sentence as token ids, optionally with the [start, end) span of the
// unit being classified. Without a span the whole sentence is the unit.
struct ClassifierInput {
  std::vector<int> token_ids;
  std::optional<std::pair<int, int>> span;

  int begin() const { return span ? span->first : 0; }
  int end() const { return span ? span->second : static_cast<int>(token_ids.size()); }
  void Validate() const;
};

class ClassifierModel {
 public:
  virtual ~ClassifierModel() = default;
  virtual int num_categories() const = 0;
  virtual int representation_dim() const = 0;
  virtual Eigen::VectorXd Encode(const ClassifierInput &input) const = 0;
  virtual std::vector<double> Predict(const ClassifierInput &input) const = 0;
};

struct TrainConfig {
  double learning_rate = 0.2;
  int batch_size = 64;
  int epochs = 3;
  double clip_norm = 5.0;
  uint64_t seed = 1;

  void Validate() const;
};

struct EncoderConfig {
  int dim = 64;
  int min_count = 1;
};

// Trainable parameters, in checkpoint order.
struct EncoderParams {
  RowMatrix embedding;  // vocab x dim, row 0 is UNK
  RowMatrix segment;    // 2 x dim: outside / inside the span
  RowMatrix query;      // dim x dim
  RowMatrix key;
  RowMatrix value;
  RowMatrix head;       // classes x dim
  Eigen::VectorXd bias;

  void SetZero(const EncoderParams &shape);
  double SquaredNorm() const;
  // this += scale * other
  void AddScaled(const EncoderParams &other, double scale);
  int64_t size() const;
};

// Token embedding plus sinusoidal position and span segment signals, one
// scaled dot-product self-attention layer with a residual connection,
// mean-pooled over the span, then a linear softmax head.
class ReferenceEncoder : public ClassifierModel {
 public:
  static constexpr int kUnk = 0;

  ReferenceEncoder(std::vector<std::string> vocab, int dim, int num_categories,
                   uint64_t seed);

  int num_categories() const override { return num_categories_; }
  int representation_dim() const override { return dim_; }
  Eigen::VectorXd Encode(const ClassifierInput &input) const override;
  std::vector<double> Predict(const ClassifierInput &input) const override;

  // Distillation loss for one item; accumulates parameter gradients into
  // `grad` when non-null.
  double LossAndGradient(const ClassifierInput &input,
                         std::span<const double> target,
                         EncoderParams *grad) const;

  ClassifierInput Tokenize(const Sentence &sentence) const;
  ClassifierInput Tokenize(const Sentence &sentence, const Phrase &phrase) const;

  const std::vector<std::string> &vocab() const { return vocab_; }
  EncoderParams &params() { return params_; }
  const EncoderParams &params() const { return params_; }
  int64_t parameter_count() const { return params_.size(); }

  uint64_t schema_hash = 0;
  uint64_t seed = 0;

  // One JSON header line, then the parameters as little-endian float32 in
  // EncoderParams order.
  void Save(std::ostream &out) const;
  static ReferenceEncoder Load(std::istream &in);
  void SaveFile(const std::string &path) const;
  static ReferenceEncoder LoadFile(const std::string &path);

 private:
  struct Activations;
  void Forward(const ClassifierInput &input, Activations *act) const;

  int dim_;
  int num_categories_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  EncoderParams params_;
};

// Vocabulary for a new encoder: "<unk>" then corpus words (case-folded) with
// at least min_count occurrences, in frequency order.
std::vector<std::string> EncoderVocab(std::span<const Sentence> corpus,
                                      int min_count);

struct TrainingItem {
  ClassifierInput input;
  std::vector<double> target;
};

struct TrainReport {
  std::vector<double> batch_loss;
  std::vector<double> epoch_loss;  // mean item loss per epoch
};

// Minibatch SGD on the mean distillation loss with global-norm clipping.
// Per-item gradients are computed on `threads` workers and summed in a fixed
// order, so results do not depend on the thread count.
TrainReport TrainItems(ReferenceEncoder &model, std::span<const TrainingItem> items,
                       const TrainConfig &config, int threads = 0);

TrainReport TrainOnSentences(ReferenceEncoder &model,
                             std::span<const PseudoSentenceLabel> labels,
                             std::span<const Sentence> corpus,
                             const TrainConfig &config, int threads = 0);

// Excluded labels are skipped; background labels train toward uniform.
TrainReport FinetuneOnPhrases(ReferenceEncoder &model,
                              std::span<const PseudoPhraseLabel> labels,
                              std::span<const Phrase> phrases,
                              std::span<const Sentence> corpus,
                              const TrainConfig &config, int threads = 0);

// Argmax category if its probability reaches theta2, else nullopt. Ties go
// to the lowest index.
std::optional<int> ClassifyPhrase(const ClassifierModel &model,
                                  const ClassifierInput &input, double theta2);
std::optional<int> ClassifyDistribution(std::span<const double> y, double theta2);

Eigen::VectorXd EmbedPhrase(const ClassifierModel &model,
                            const ClassifierInput &input);

}  // namespace opsum

#endif  // OPSUM_CLASSIFIER_H_
