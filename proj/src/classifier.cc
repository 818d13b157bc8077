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

#include "opsum/classifier.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "opsum/io.h"
#include "opsum/parallel.h"

namespace opsum {

namespace {

constexpr double kPositionBase = 10000.0;

RowMatrix Positions(int length, int dim) {
  RowMatrix p(length, dim);
  for (int t = 0; t < length; ++t) {
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(kPositionBase, -2.0 * (i / 2) / dim);
      p(t, i) = i % 2 == 0 ? std::sin(t * rate) : std::cos(t * rate);
    }
  }
  return p;
}

void RowSoftmax(RowMatrix &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

void FillNormal(RowMatrix &m, double stddev, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
}

template <typename Fn>
void ForEachBlock(EncoderParams &p, Fn &&fn) {
  fn(p.embedding.data(), p.embedding.size());
  fn(p.segment.data(), p.segment.size());
  fn(p.query.data(), p.query.size());
  fn(p.key.data(), p.key.size());
  fn(p.value.data(), p.value.size());
  fn(p.head.data(), p.head.size());
  fn(p.bias.data(), p.bias.size());
}

}  // namespace

void ClassifierInput::Validate() const {
  if (token_ids.empty()) throw ValidationError("classifier input: no tokens");
  if (span && (span->first < 0 || span->second > static_cast<int>(token_ids.size()) ||
               span->first >= span->second)) {
    throw ValidationError("classifier input: span [" + std::to_string(span->first) +
                          ", " + std::to_string(span->second) + ") outside " +
                          std::to_string(token_ids.size()) + " tokens");
  }
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(clip_norm > 0)) throw ValidationError("clip_norm must be > 0");
}

void EncoderParams::SetZero(const EncoderParams &shape) {
  embedding.setZero(shape.embedding.rows(), shape.embedding.cols());
  segment.setZero(shape.segment.rows(), shape.segment.cols());
  query.setZero(shape.query.rows(), shape.query.cols());
  key.setZero(shape.key.rows(), shape.key.cols());
  value.setZero(shape.value.rows(), shape.value.cols());
  head.setZero(shape.head.rows(), shape.head.cols());
  bias.setZero(shape.bias.size());
}

double EncoderParams::SquaredNorm() const {
  return embedding.squaredNorm() + segment.squaredNorm() + query.squaredNorm() +
         key.squaredNorm() + value.squaredNorm() + head.squaredNorm() +
         bias.squaredNorm();
}

void EncoderParams::AddScaled(const EncoderParams &other, double scale) {
  embedding += scale * other.embedding;
  segment += scale * other.segment;
  query += scale * other.query;
  key += scale * other.key;
  value += scale * other.value;
  head += scale * other.head;
  bias += scale * other.bias;
}

int64_t EncoderParams::size() const {
  return embedding.size() + segment.size() + query.size() + key.size() +
         value.size() + head.size() + bias.size();
}

struct ReferenceEncoder::Activations {
  RowMatrix hidden;  // T x d, encoder input
  RowMatrix q, k, v;
  RowMatrix attention;  // T x T, row-softmaxed
  RowMatrix output;     // hidden + attention * v
  Eigen::VectorXd pooled;
  Eigen::VectorXd probs;
};

ReferenceEncoder::ReferenceEncoder(std::vector<std::string> vocab, int dim,
                                   int num_categories, uint64_t seed)
    : seed(seed), dim_(dim), num_categories_(num_categories), vocab_(std::move(vocab)) {
  if (dim < 1) throw ValidationError("encoder dim must be >= 1");
  if (num_categories < 2) throw ValidationError("encoder needs >= 2 categories");
  if (vocab_.empty()) vocab_.push_back("<unk>");
  for (size_t i = 1; i < vocab_.size(); ++i) index_.emplace(vocab_[i], static_cast<int>(i));

  std::mt19937_64 rng(seed);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));
  params_.embedding.resize(vocab_.size(), dim);
  params_.segment.resize(2, dim);
  params_.query.resize(dim, dim);
  params_.key.resize(dim, dim);
  params_.value.resize(dim, dim);
  params_.head.resize(num_categories, dim);
  FillNormal(params_.embedding, 1.0, rng);
  FillNormal(params_.query, inv_sqrt, rng);
  FillNormal(params_.key, inv_sqrt, rng);
  FillNormal(params_.value, inv_sqrt, rng);
  FillNormal(params_.head, 0.1 * inv_sqrt, rng);
  params_.bias.setZero(num_categories);
  // Sentence training never marks tokens as outside a span; a zero start
  // keeps phrase inputs on the same footing until fine-tuning moves it.
  params_.segment.setZero();
}

void ReferenceEncoder::Forward(const ClassifierInput &input, Activations *act) const {
  input.Validate();
  const int length = static_cast<int>(input.token_ids.size());
  act->hidden = Positions(length, dim_);
  for (int t = 0; t < length; ++t) {
    int id = input.token_ids[t];
    if (id < 0 || id >= static_cast<int>(vocab_.size())) id = kUnk;
    const bool inside = t >= input.begin() && t < input.end();
    act->hidden.row(t) += params_.embedding.row(id) + params_.segment.row(inside ? 1 : 0);
  }
  act->q = act->hidden * params_.query;
  act->k = act->hidden * params_.key;
  act->v = act->hidden * params_.value;
  act->attention = act->q * act->k.transpose() / std::sqrt(static_cast<double>(dim_));
  RowSoftmax(act->attention);
  act->output = act->hidden + act->attention * act->v;
  const int width = input.end() - input.begin();
  act->pooled = act->output.middleRows(input.begin(), width).colwise().mean().transpose();
  Eigen::VectorXd logits = params_.head * act->pooled + params_.bias;
  logits.array() -= logits.maxCoeff();
  act->probs = logits.array().exp();
  act->probs /= act->probs.sum();
}

Eigen::VectorXd ReferenceEncoder::Encode(const ClassifierInput &input) const {
  Activations act;
  Forward(input, &act);
  return act.pooled;
}

std::vector<double> ReferenceEncoder::Predict(const ClassifierInput &input) const {
  Activations act;
  Forward(input, &act);
  return {act.probs.data(), act.probs.data() + act.probs.size()};
}

double ReferenceEncoder::LossAndGradient(const ClassifierInput &input,
                                         std::span<const double> target,
                                         EncoderParams *grad) const {
  if (static_cast<int>(target.size()) != num_categories_) {
    throw ValidationError("target has " + std::to_string(target.size()) +
                          " classes, model has " + std::to_string(num_categories_));
  }
  Activations act;
  Forward(input, &act);
  const double loss = DistillLoss(target, {act.probs.data(), size_t(act.probs.size())});
  if (grad == nullptr) return loss;

  // KL(l || softmax(z)) has gradient softmax(z) - l for a normalized l.
  const Eigen::Map<const Eigen::VectorXd> l(target.data(), target.size());
  const Eigen::VectorXd d_logits = act.probs - l;
  grad->head += d_logits * act.pooled.transpose();
  grad->bias += d_logits;
  const Eigen::VectorXd d_pooled = params_.head.transpose() * d_logits;

  const int length = static_cast<int>(input.token_ids.size());
  const int width = input.end() - input.begin();
  RowMatrix d_output = RowMatrix::Zero(length, dim_);
  for (int t = input.begin(); t < input.end(); ++t) {
    d_output.row(t) = d_pooled.transpose() / width;
  }

  RowMatrix d_hidden = d_output;
  const RowMatrix d_attention = d_output * act.v.transpose();
  const RowMatrix d_v = act.attention.transpose() * d_output;
  RowMatrix d_scores = act.attention.cwiseProduct(d_attention);
  const Eigen::VectorXd row_sums = d_scores.rowwise().sum();
  d_scores -= act.attention.cwiseProduct(row_sums.replicate(1, length));
  d_scores /= std::sqrt(static_cast<double>(dim_));
  const RowMatrix d_q = d_scores * act.k;
  const RowMatrix d_k = d_scores.transpose() * act.q;

  grad->query += act.hidden.transpose() * d_q;
  grad->key += act.hidden.transpose() * d_k;
  grad->value += act.hidden.transpose() * d_v;
  d_hidden += d_q * params_.query.transpose() + d_k * params_.key.transpose() +
              d_v * params_.value.transpose();

  for (int t = 0; t < length; ++t) {
    int id = input.token_ids[t];
    if (id < 0 || id >= static_cast<int>(vocab_.size())) id = kUnk;
    const bool inside = t >= input.begin() && t < input.end();
    grad->embedding.row(id) += d_hidden.row(t);
    grad->segment.row(inside ? 1 : 0) += d_hidden.row(t);
  }
  return loss;
}

ClassifierInput ReferenceEncoder::Tokenize(const Sentence &sentence) const {
  ClassifierInput input;
  input.token_ids.reserve(sentence.tokens.size());
  for (const Token &token : sentence.tokens) {
    auto it = index_.find(FoldCase(token.surface));
    input.token_ids.push_back(it == index_.end() ? kUnk : it->second);
  }
  return input;
}

ClassifierInput ReferenceEncoder::Tokenize(const Sentence &sentence,
                                           const Phrase &phrase) const {
  if (phrase.token_indices.empty()) {
    throw ValidationError("phrase " + phrase.id + " has no tokens");
  }
  ClassifierInput input = Tokenize(sentence);
  // Extracted phrases may be discontiguous; the span covers their extent.
  auto [lo, hi] = std::minmax_element(phrase.token_indices.begin(),
                                      phrase.token_indices.end());
  input.span = std::make_pair(*lo, *hi + 1);
  input.Validate();
  return input;
}

void ReferenceEncoder::Save(std::ostream &out) const {
  nlohmann::json header = {
      {"format", "opsum-encoder/1"},
      {"dim", dim_},
      {"categories", num_categories_},
      {"schema_hash", schema_hash},
      {"seed", seed},
      {"parameters", params_.size()},
      {"vocab", vocab_},
  };
  out << header.dump() << '\n';
  EncoderParams copy = params_;
  ForEachBlock(copy, [&](const double *data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(data[i]));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char bytes[4];
      std::memcpy(bytes, &bits, 4);
      out.write(bytes, 4);
    }
  });
  if (!out) throw std::runtime_error("failed writing encoder checkpoint");
}

ReferenceEncoder ReferenceEncoder::Load(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
    if (header.at("format") != "opsum-encoder/1") {
      throw ParseError("checkpoint: unsupported format " + header.at("format").dump());
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  ReferenceEncoder model(header.at("vocab").get<std::vector<std::string>>(),
                         header.at("dim").get<int>(), header.at("categories").get<int>(),
                         header.at("seed").get<uint64_t>());
  model.schema_hash = header.at("schema_hash").get<uint64_t>();
  if (header.at("parameters").get<int64_t>() != model.params_.size()) {
    throw ParseError("checkpoint: parameter count does not match header dims");
  }
  ForEachBlock(model.params_, [&](double *data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      char bytes[4];
      if (!in.read(bytes, 4)) throw ParseError("checkpoint: truncated weight block");
      uint32_t bits;
      std::memcpy(&bits, bytes, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      data[i] = std::bit_cast<float>(bits);
    }
  });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("checkpoint: trailing bytes after weight block");
  }
  return model;
}

void ReferenceEncoder::SaveFile(const std::string &path) const {
  WriteFileAtomic(path, [&](std::ostream &out) { Save(out); }, /*binary=*/true);
}

ReferenceEncoder ReferenceEncoder::LoadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path);
  return Load(in);
}

std::vector<std::string> EncoderVocab(std::span<const Sentence> corpus, int min_count) {
  std::map<std::string, int64_t> counts;
  for (const Sentence &s : corpus) {
    for (const Token &t : s.tokens) ++counts[FoldCase(t.surface)];
  }
  std::vector<std::pair<std::string, int64_t>> entries(counts.begin(), counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::vector<std::string> vocab = {"<unk>"};
  for (const auto &[word, count] : entries) {
    if (count >= min_count) vocab.push_back(word);
  }
  return vocab;
}

TrainReport TrainItems(ReferenceEncoder &model, std::span<const TrainingItem> items,
                       const TrainConfig &config, int threads) {
  config.Validate();
  TrainReport report;
  if (items.empty()) return report;
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);

  const int workers = std::max(1, threads);
  std::vector<EncoderParams> partial(workers);
  std::vector<double> partial_loss(workers);
  EncoderParams total;
  total.SetZero(model.params());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const size_t n = stop - start;
      for (int w = 0; w < workers; ++w) {
        partial[w].SetZero(model.params());
        partial_loss[w] = 0;
      }
      // Contiguous blocks keep the summation order independent of scheduling.
      const size_t block = (n + workers - 1) / workers;
      ParallelFor(workers, threads, [&](size_t w) {
        for (size_t i = start + w * block; i < std::min(stop, start + (w + 1) * block); ++i) {
          const TrainingItem &item = items[order[i]];
          partial_loss[w] += model.LossAndGradient(item.input, item.target, &partial[w]);
        }
      });
      total.SetZero(model.params());
      double batch_loss = 0;
      for (int w = 0; w < workers; ++w) {
        total.AddScaled(partial[w], 1.0 / n);
        batch_loss += partial_loss[w];
      }
      batch_loss /= n;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("non-finite loss in epoch " + std::to_string(epoch + 1) +
                                 ", batch starting at item " + std::to_string(start));
      }
      const double norm = std::sqrt(total.SquaredNorm());
      const double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      model.params().AddScaled(total, -config.learning_rate * scale);
      report.batch_loss.push_back(batch_loss);
      epoch_loss += batch_loss * n;
    }
    report.epoch_loss.push_back(epoch_loss / items.size());
  }
  return report;
}

namespace {

std::unordered_map<std::string, const Sentence *> IndexSentences(
    std::span<const Sentence> corpus) {
  std::unordered_map<std::string, const Sentence *> index;
  for (const Sentence &s : corpus) index.emplace(s.id, &s);
  return index;
}

const Sentence &Lookup(const std::unordered_map<std::string, const Sentence *> &index,
                       const std::string &id) {
  auto it = index.find(id);
  if (it == index.end()) throw ValidationError("unknown sentence id '" + id + "'");
  return *it->second;
}

}  // namespace

TrainReport TrainOnSentences(ReferenceEncoder &model,
                             std::span<const PseudoSentenceLabel> labels,
                             std::span<const Sentence> corpus,
                             const TrainConfig &config, int threads) {
  const auto index = IndexSentences(corpus);
  std::vector<TrainingItem> items;
  items.reserve(labels.size());
  for (const PseudoSentenceLabel &label : labels) {
    items.push_back({model.Tokenize(Lookup(index, label.sentence_id)), label.distribution});
  }
  return TrainItems(model, items, config, threads);
}

TrainReport FinetuneOnPhrases(ReferenceEncoder &model,
                              std::span<const PseudoPhraseLabel> labels,
                              std::span<const Phrase> phrases,
                              std::span<const Sentence> corpus,
                              const TrainConfig &config, int threads) {
  const auto index = IndexSentences(corpus);
  std::unordered_map<std::string, const Phrase *> phrase_index;
  for (const Phrase &p : phrases) phrase_index.emplace(p.id, &p);
  std::vector<TrainingItem> items;
  for (const PseudoPhraseLabel &label : labels) {
    if (label.outcome == PhraseOutcome::kExcluded) continue;
    auto it = phrase_index.find(label.phrase_id);
    if (it == phrase_index.end()) {
      throw ValidationError("unknown phrase id '" + label.phrase_id + "'");
    }
    const Phrase &phrase = *it->second;
    items.push_back({model.Tokenize(Lookup(index, phrase.sentence_id), phrase),
                     label.distribution});
  }
  return TrainItems(model, items, config, threads);
}

std::optional<int> ClassifyDistribution(std::span<const double> y, double theta2) {
  if (y.empty()) return std::nullopt;
  const auto best = std::max_element(y.begin(), y.end());  // first maximum
  if (*best < theta2) return std::nullopt;
  return static_cast<int>(best - y.begin());
}

std::optional<int> ClassifyPhrase(const ClassifierModel &model,
                                  const ClassifierInput &input, double theta2) {
  return ClassifyDistribution(model.Predict(input), theta2);
}

Eigen::VectorXd EmbedPhrase(const ClassifierModel &model, const ClassifierInput &input) {
  return model.Encode(input);
}

}  // namespace opsum
