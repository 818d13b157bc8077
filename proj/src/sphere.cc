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

#include "opsum/sphere.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace opsum {
namespace {

// -log(sigmoid(z)) without overflow.
double NegLogSigmoid(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void SampleOnSphere(std::span<double> v, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  do {
    for (double &x : v) x = normal(rng);
  } while (Dot(v, v) < 1e-20);
  Normalize(v);
}

void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

void CheckFinite(double value, const char *what, int epoch) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "embedding training diverged: non-finite " << what << " in epoch "
        << epoch;
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

void EmbedConfig::Validate() const {
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
  if (window < 1) throw ValidationError("window must be >= 1");
  if (negatives < 1) throw ValidationError("negatives must be >= 1");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!(concentration > 0)) throw ValidationError("concentration must be > 0");
  if (warmup_epochs < 0) throw ValidationError("warmup_epochs must be >= 0");
  if (!(learning_rate > 0)) throw ValidationError("learning rate must be > 0");
  if (!(m_intra > 0 && m_intra < 1)) throw ValidationError("m_intra must be in (0, 1)");
  if (!(m_inter > 0 && m_inter <= 2)) throw ValidationError("m_inter must be in (0, 2]");
  if (refine_iterations < 0) throw ValidationError("refine_iterations must be >= 0");
  if (!(refine_lr_scale > 0)) throw ValidationError("refine_lr_scale must be > 0");
  if (!(category_lr_scale >= 0)) throw ValidationError("category_lr_scale must be >= 0");
  if (threads < 0) throw ValidationError("threads must be >= 0");
}

int VectorTable::Add(const std::string &name) {
  int id = size();
  if (!index_.emplace(name, id).second) {
    throw ValidationError("duplicate vector name '" + name + "'");
  }
  names_.push_back(name);
  data_.resize(data_.size() + dim_, 0.0);
  return id;
}

int VectorTable::Find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? -1 : it->second;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void Normalize(std::span<double> v) {
  double n = std::sqrt(Dot(v, v));
  if (n < 1e-300) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return;
  }
  for (double &x : v) x /= n;
}

double MaxNormDeviation(const SphereSpace &space) {
  double worst = 0;
  for (const VectorTable *t : {&space.words, &space.sentences, &space.categories}) {
    for (int i = 0; i < t->size(); ++i) {
      auto r = t->row(i);
      worst = std::max(worst, std::abs(std::sqrt(Dot(r, r)) - 1.0));
    }
  }
  return worst;
}

void SphereSpace::Save(std::ostream &out) const {
  out << dim << ' ' << words.size() << ' ' << sentences.size() << ' '
      << categories.size() << ' ' << std::setprecision(17) << m_inter << ' '
      << m_intra << "\n";
  auto dump = [&](char kind, const VectorTable &t) {
    for (int i = 0; i < t.size(); ++i) {
      out << kind << ' ' << t.name(i);
      for (double x : t.row(i)) out << ' ' << x;
      out << "\n";
    }
  };
  dump('w', words);
  dump('s', sentences);
  dump('c', categories);
}

SphereSpace SphereSpace::Load(std::istream &in) {
  SphereSpace space;
  int n_words, n_sents, n_cats;
  std::string header;
  if (!std::getline(in, header)) throw ParseError("embedding: missing header");
  std::istringstream hs(header);
  if (!(hs >> space.dim >> n_words >> n_sents >> n_cats >> space.m_inter >>
        space.m_intra) || space.dim < 1) {
    throw ParseError("embedding: malformed header");
  }
  space.words = VectorTable(space.dim);
  space.sentences = VectorTable(space.dim);
  space.categories = VectorTable(space.dim);
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    VectorTable *table = kind == "w"   ? &space.words
                         : kind == "s" ? &space.sentences
                         : kind == "c" ? &space.categories
                                       : nullptr;
    if (table == nullptr || name.empty()) {
      throw ParseError("embedding line " + std::to_string(line_no) +
                       ": bad row kind");
    }
    auto row = table->row(table->Add(name));
    for (double &x : row) {
      if (!(ls >> x)) {
        throw ParseError("embedding line " + std::to_string(line_no) +
                         ": expected " + std::to_string(space.dim) + " values");
      }
    }
  }
  if (space.words.size() != n_words || space.sentences.size() != n_sents ||
      space.categories.size() != n_cats) {
    throw ParseError("embedding: row counts do not match header");
  }
  return space;
}

SphereSpace InitSpace(const Vocabulary &vocab, const CategorySchema &schema,
                      std::span<const Sentence> corpus, const EmbedConfig &config) {
  config.Validate();
  schema.Validate();
  SphereSpace space;
  space.dim = config.dim;
  space.m_inter = config.m_inter;
  space.m_intra = config.m_intra;
  space.words = VectorTable(config.dim);
  space.sentences = VectorTable(config.dim);
  space.categories = VectorTable(config.dim);

  std::mt19937_64 rng(config.seed);
  for (const auto &e : vocab.entries()) SampleOnSphere(space.words.row(space.words.Add(e.word)), rng);
  for (const Sentence &s : corpus) {
    SampleOnSphere(space.sentences.row(space.sentences.Add(s.id)), rng);
  }
  for (const Category &c : schema.categories) {
    auto a = space.categories.row(space.categories.Add(c.name));
    for (const std::string &k : c.keywords) {
      int id = space.words.Find(k);
      if (id < 0) throw ValidationError("keyword '" + k + "' is not in the vocabulary");
      Axpy(1.0, space.words.row(id), a);
    }
    Normalize(a);
  }
  return space;
}

std::vector<std::vector<int>> KeywordIds(const SphereSpace &space,
                                         const CategorySchema &schema) {
  std::vector<std::vector<int>> ids;
  for (const Category &c : schema.categories) {
    auto &row = ids.emplace_back();
    for (const std::string &k : c.keywords) {
      int id = space.words.Find(k);
      if (id < 0) throw ValidationError("keyword '" + k + "' is not in the vocabulary");
      row.push_back(id);
    }
  }
  return ids;
}

double LossInter(const SphereSpace &space) {
  const int n = space.categories.size();
  double loss = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double dot = Dot(space.categories.row(i), space.categories.row(j));
      loss += std::min(0.0, 1.0 - dot - space.m_inter);
    }
  }
  return loss;
}

double LossIntra(const SphereSpace &space,
                 const std::vector<std::vector<int>> &keyword_ids) {
  double loss = 0;
  for (size_t i = 0; i < keyword_ids.size(); ++i) {
    for (int w : keyword_ids[i]) {
      double dot = Dot(space.words.row(w), space.categories.row(int(i)));
      loss += std::min(0.0, dot - space.m_intra);
    }
  }
  return loss;
}

double LossIntra(const SphereSpace &space, const CategorySchema &schema) {
  return LossIntra(space, KeywordIds(space, schema));
}

SpaceGradient ZeroGradient(const SphereSpace &space) {
  SpaceGradient g;
  g.words.assign(space.words.data().size(), 0.0);
  g.categories.assign(space.categories.data().size(), 0.0);
  return g;
}

void InterGradient(const SphereSpace &space, SpaceGradient *grad) {
  const int n = space.categories.size(), d = space.dim;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      auto ai = space.categories.row(i), aj = space.categories.row(j);
      if (1.0 - Dot(ai, aj) - space.m_inter >= 0) continue;
      // d/da of (a_i.a_j - 1 + m_inter).
      Axpy(1.0, aj, {grad->categories.data() + size_t(i) * d, size_t(d)});
      Axpy(1.0, ai, {grad->categories.data() + size_t(j) * d, size_t(d)});
    }
  }
}

void IntraGradient(const SphereSpace &space,
                   const std::vector<std::vector<int>> &keyword_ids,
                   SpaceGradient *grad) {
  const int d = space.dim;
  for (size_t i = 0; i < keyword_ids.size(); ++i) {
    auto a = space.categories.row(int(i));
    for (int w : keyword_ids[i]) {
      auto v = space.words.row(w);
      if (Dot(v, a) - space.m_intra >= 0) continue;
      // d/d(w, a) of (m_intra - w.a).
      Axpy(-1.0, a, {grad->words.data() + size_t(w) * d, size_t(d)});
      Axpy(-1.0, v, {grad->categories.data() + i * d, size_t(d)});
    }
  }
}

double SigmoidPairLoss(std::span<const double> u, std::span<const double> v,
                       double sign, double kappa, std::span<double> grad_u,
                       std::span<double> grad_v) {
  double z = sign * kappa * Dot(u, v);
  // d/dz of -log s(z) is -(1 - s(z)).
  double g = -(1.0 - Sigmoid(z)) * sign * kappa;
  Axpy(g, v, grad_u);
  Axpy(g, u, grad_v);
  return NegLogSigmoid(z);
}

double NegativeSamplingLoss(std::span<const double> u, std::span<const double> v,
                            const std::vector<std::span<const double>> &negatives,
                            double kappa, std::span<double> grad_u,
                            std::span<double> grad_v,
                            const std::vector<std::span<double>> &grad_negatives) {
  double loss = SigmoidPairLoss(u, v, 1.0, kappa, grad_u, grad_v);
  for (size_t k = 0; k < negatives.size(); ++k) {
    loss += SigmoidPairLoss(u, negatives[k], -1.0, kappa, grad_u, grad_negatives[k]);
  }
  return loss;
}

// Per-thread scratch state.
struct SphereTrainer::Worker {
  std::mt19937_64 rng;
  std::vector<double> grad_u, grad_v;
  std::vector<std::vector<double>> grad_neg;
  std::vector<int> negatives;
  std::vector<VectorRef> touched;
  SpaceGradient margin;
  double lr = 0;
  bool observe = true;
};

double SphereTrainer::LearningRate(int64_t sentences_done) const {
  // Linear decay over the whole run, as in word2vec.
  double total = double(std::max(1, config_.epochs)) * space_->sentences.size();
  double done = double(epoch_ - 1) * space_->sentences.size() + sentences_done;
  return config_.learning_rate * std::max(1e-4, 1.0 - done / total);
}

SphereTrainer::SphereTrainer(SphereSpace *space, const Vocabulary &vocab,
                             const CategorySchema &schema,
                             std::span<const Sentence> corpus,
                             const EmbedConfig &config)
    : space_(space), config_(config), rng_(config.seed ^ 0x9e3779b97f4a7c15ull) {
  config_.Validate();
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  if (space->sentences.size() != static_cast<int>(corpus.size())) {
    throw ValidationError("space and corpus disagree on sentence count");
  }
  keyword_ids_ = KeywordIds(*space, schema);
  sentence_words_.reserve(corpus.size());
  for (const Sentence &s : corpus) {
    auto &ids = sentence_words_.emplace_back();
    for (const Token &t : s.tokens) {
      int id = space->words.Find(FoldCase(t.surface));
      if (id >= 0) ids.push_back(id);
    }
  }
  std::vector<double> weights(space->words.size(), 0.0);
  for (int i = 0; i < space->words.size(); ++i) {
    int vid = vocab.Find(space->words.name(i));
    if (vid >= 0) weights[i] = std::pow(double(vocab.count(vid)), 0.75);
    can_sample_words_ = can_sample_words_ || weights[i] > 0;
  }
  if (can_sample_words_) {
    word_sampler_ = std::discrete_distribution<int>(weights.begin(), weights.end());
  }
  assignment_.assign(corpus.size(), -1);
}

std::span<double> SphereTrainer::Row(TableKind kind, int id) {
  switch (kind) {
    case TableKind::kWord: return space_->words.row(id);
    case TableKind::kSentence: return space_->sentences.row(id);
    case TableKind::kCategory: return space_->categories.row(id);
  }
  return {};
}

void SphereTrainer::Assign(TrainStats *stats) {
  const int n_cats = space_->categories.size();
  for (int s = 0; s < space_->sentences.size(); ++s) {
    auto x = space_->sentences.row(s);
    int best = 0;
    double best_score = -2;
    for (int c = 0; c < n_cats; ++c) {
      double score = Dot(x, space_->categories.row(c));
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    if (assignment_[s] != best) ++stats->reassigned;
    assignment_[s] = best;
  }
}

void SphereTrainer::Step(TableKind ukind, int uid, TableKind vkind, int vid,
                         TableKind nkind, std::span<const int> negatives,
                         Worker &w, TrainStats *stats) {
  const size_t d = space_->dim;
  std::span<double> u = Row(ukind, uid), v = Row(vkind, vid);
  std::fill(w.grad_u.begin(), w.grad_u.end(), 0.0);
  std::fill(w.grad_v.begin(), w.grad_v.end(), 0.0);
  std::vector<std::span<const double>> negs;
  std::vector<std::span<double>> gnegs;
  if (w.grad_neg.size() < negatives.size()) w.grad_neg.resize(negatives.size());
  for (size_t k = 0; k < negatives.size(); ++k) {
    w.grad_neg[k].assign(d, 0.0);
    negs.push_back(Row(nkind, negatives[k]));
    gnegs.push_back(w.grad_neg[k]);
  }
  double loss = NegativeSamplingLoss(u, v, negs, config_.concentration, w.grad_u,
                                     w.grad_v, gnegs);
  CheckFinite(loss, "pair loss", epoch_);
  stats->aspect_loss += loss;

  // All gradients were taken at the old point; apply them together.
  auto rate = [&](TableKind kind) {
    return kind == TableKind::kCategory ? w.lr * config_.category_lr_scale : w.lr;
  };
  Axpy(-rate(ukind), w.grad_u, u);
  Axpy(-rate(vkind), w.grad_v, v);
  for (size_t k = 0; k < negatives.size(); ++k) {
    Axpy(-rate(nkind), w.grad_neg[k], Row(nkind, negatives[k]));
  }
  Normalize(u);
  Normalize(v);
  for (size_t k = 0; k < negatives.size(); ++k) Normalize(Row(nkind, negatives[k]));
  ++stats->steps;

  if (observer_ && w.observe) {
    w.touched.clear();
    w.touched.push_back({ukind, uid});
    w.touched.push_back({vkind, vid});
    for (int n : negatives) w.touched.push_back({nkind, n});
    observer_(*space_, w.touched);
  }
}

void SphereTrainer::MarginStep(Worker &w) {
  const size_t d = space_->dim;
  const double lr = w.lr;
  InterGradient(*space_, &w.margin);
  IntraGradient(*space_, keyword_ids_, &w.margin);
  w.touched.clear();
  for (size_t i = 0; i < keyword_ids_.size(); ++i) {
    for (int id : keyword_ids_[i]) {
      std::span<double> g{w.margin.words.data() + id * d, d};
      if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) continue;
      auto row = space_->words.row(id);
      Axpy(-lr, g, row);
      Normalize(row);
      std::fill(g.begin(), g.end(), 0.0);
      w.touched.push_back({TableKind::kWord, id});
    }
  }
  for (int c = 0; c < space_->categories.size(); ++c) {
    std::span<double> g{w.margin.categories.data() + c * d, d};
    if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) continue;
    auto row = space_->categories.row(c);
    Axpy(-lr, g, row);
    Normalize(row);
    std::fill(g.begin(), g.end(), 0.0);
    w.touched.push_back({TableKind::kCategory, c});
  }
  if (observer_ && w.observe && !w.touched.empty()) observer_(*space_, w.touched);
}

void SphereTrainer::TrainSentence(int s, Worker &w, TrainStats *stats) {
  const std::vector<int> &words = sentence_words_[s];
  const int n_cats = space_->categories.size();
  const int k = config_.negatives;

  // (sentence, category): negatives are other categories.
  int cat = assignment_[s];
  if (cat >= 0) {
    w.negatives.clear();
    std::uniform_int_distribution<int> other(0, n_cats - 2);
    for (int i = 0; i < k; ++i) {
      int c = other(w.rng);
      w.negatives.push_back(c >= cat ? c + 1 : c);
    }
    Step(TableKind::kSentence, s, TableKind::kCategory, cat, TableKind::kCategory,
         w.negatives, w, stats);
  }

  auto sample_words = [&](int positive) {
    w.negatives.clear();
    if (!can_sample_words_) return;
    for (int i = 0; i < k; ++i) {
      int n = word_sampler_(w.rng);
      if (n != positive) w.negatives.push_back(n);
    }
  };

  // (sentence, word)
  for (int wid : words) {
    sample_words(wid);
    Step(TableKind::kSentence, s, TableKind::kWord, wid, TableKind::kWord,
         w.negatives, w, stats);
  }

  // (word, context word)
  const int n = static_cast<int>(words.size());
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - config_.window);
         j <= std::min(n - 1, i + config_.window); ++j) {
      if (j == i) continue;
      sample_words(words[j]);
      Step(TableKind::kWord, words[i], TableKind::kWord, words[j],
           TableKind::kWord, w.negatives, w, stats);
    }
  }
  MarginStep(w);
}

void SphereTrainer::RefineSentences(Worker &w) {
  const size_t d = space_->dim;
  const int k = config_.negatives;
  const double lr = LearningRate(0) * config_.refine_lr_scale;
  for (int iter = 0; iter < config_.refine_iterations; ++iter) {
    for (int s = 0; s < space_->sentences.size(); ++s) {
      auto x = space_->sentences.row(s);
      for (int wid : sentence_words_[s]) {
        std::fill(w.grad_u.begin(), w.grad_u.end(), 0.0);
        std::fill(w.grad_v.begin(), w.grad_v.end(), 0.0);
        std::vector<std::span<const double>> negs;
        std::vector<std::span<double>> gnegs;
        if (w.grad_neg.size() < size_t(k)) w.grad_neg.resize(k);
        int used = 0;
        for (int i = 0; i < k && can_sample_words_; ++i) {
          int n = word_sampler_(w.rng);
          if (n == wid) continue;
          w.grad_neg[used].assign(d, 0.0);
          negs.push_back(space_->words.row(n));
          gnegs.push_back(w.grad_neg[used++]);
        }
        NegativeSamplingLoss(x, space_->words.row(wid), negs,
                             config_.concentration, w.grad_u, w.grad_v, gnegs);
        Axpy(-lr, w.grad_u, x);
        Normalize(x);
        if (observer_) {
          const VectorRef ref{TableKind::kSentence, s};
          observer_(*space_, {&ref, 1});
        }
      }
    }
  }
}

TrainStats SphereTrainer::TrainEpoch() {
  TrainStats stats;
  stats.epoch = ++epoch_;

  auto make_worker = [&](uint64_t salt) {
    Worker w;
    w.rng.seed(rng_() ^ salt);
    w.grad_u.assign(space_->dim, 0.0);
    w.grad_v.assign(space_->dim, 0.0);
    w.margin = ZeroGradient(*space_);
    return w;
  };

  if (epoch_ > config_.warmup_epochs) {
    Worker w = make_worker(0x5e);
    RefineSentences(w);
    Assign(&stats);
  }

  std::vector<int> order(space_->sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  const int threads = config_.threads;
  if (threads <= 1) {
    Worker w = make_worker(0);
    for (size_t i = 0; i < order.size(); ++i) {
      w.lr = LearningRate(int64_t(i));
      TrainSentence(order[i], w, &stats);
    }
  } else {
    // Hogwild: shards update the shared tables without locks.
    std::vector<Worker> workers;
    std::vector<TrainStats> partial(threads);
    for (int t = 0; t < threads; ++t) {
      workers.push_back(make_worker(uint64_t(t) + 1));
      workers.back().observe = false;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (size_t i = t; i < order.size(); i += threads) {
          workers[t].lr = LearningRate(int64_t(i));
          TrainSentence(order[i], workers[t], &partial[t]);
        }
      });
    }
    for (std::thread &t : pool) t.join();
    for (const TrainStats &p : partial) {
      stats.aspect_loss += p.aspect_loss;
      stats.steps += p.steps;
    }
  }
  stats.inter_loss = LossInter(*space_);
  stats.intra_loss = LossIntra(*space_, keyword_ids_);
  CheckFinite(stats.aspect_loss, "aspect loss", epoch_);
  return stats;
}

SphereSpace TrainEmbedding(const Vocabulary &vocab, const CategorySchema &schema,
                           std::span<const Sentence> corpus,
                           const EmbedConfig &config,
                           std::vector<TrainStats> *history) {
  SphereSpace space = InitSpace(vocab, schema, corpus, config);
  SphereTrainer trainer(&space, vocab, schema, corpus, config);
  for (int e = 0; e < config.epochs; ++e) {
    TrainStats stats = trainer.TrainEpoch();
    if (history != nullptr) history->push_back(stats);
  }
  return space;
}

std::vector<double> SentenceScores(const SphereSpace &space,
                                   std::string_view sentence_id) {
  int id = space.sentences.Find(sentence_id);
  if (id < 0) {
    throw ValidationError("unknown sentence id '" + std::string(sentence_id) + "'");
  }
  std::vector<double> scores;
  for (int c = 0; c < space.categories.size(); ++c) {
    scores.push_back(Dot(space.sentences.row(id), space.categories.row(c)));
  }
  return scores;
}

std::vector<double> PhraseSimilarity(const SphereSpace &space,
                                     std::span<const std::string> words) {
  std::vector<double> mean(space.dim, 0.0);
  int found = 0;
  for (const std::string &word : words) {
    int id = space.words.Find(FoldCase(word));
    if (id < 0) continue;
    Axpy(1.0, space.words.row(id), mean);
    ++found;
  }
  if (found == 0) throw ValidationError("phrase has no in-vocabulary word");
  for (double &x : mean) x /= found;
  std::vector<double> sims;
  for (int c = 0; c < space.categories.size(); ++c) {
    sims.push_back(Dot(mean, space.categories.row(c)));
  }
  return sims;
}

std::vector<double> PhraseSimilarity(const SphereSpace &space,
                                     const Phrase &phrase,
                                     const Sentence &sentence) {
  std::vector<std::string> words;
  for (int i : phrase.token_indices) words.push_back(sentence.tokens.at(i).surface);
  return PhraseSimilarity(space, words);
}

}  // namespace opsum
