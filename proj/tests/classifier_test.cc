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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "opsum/synthetic.h"

namespace opsum {
namespace {

std::vector<std::string> SmallVocab() { return {"<unk>", "the", "soup", "was", "cold"}; }

ClassifierInput Input(std::vector<int> ids, std::optional<std::pair<int, int>> span = {}) {
  return ClassifierInput{std::move(ids), span};
}

// Step-by-step forward pass with explicit loops.
struct Oracle {
  std::vector<double> pooled;
  std::vector<double> probs;
};

Oracle ForwardOracle(const ReferenceEncoder &model, const ClassifierInput &in) {
  const EncoderParams &p = model.params();
  const int d = model.representation_dim();
  const int n = static_cast<int>(in.token_ids.size());
  std::vector<std::vector<double>> h(n, std::vector<double>(d));
  for (int t = 0; t < n; ++t) {
    const int seg = (t >= in.begin() && t < in.end()) ? 1 : 0;
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -2.0 * (i / 2) / d);
      const double pos = i % 2 == 0 ? std::sin(t * rate) : std::cos(t * rate);
      h[t][i] = p.embedding(in.token_ids[t], i) + pos + p.segment(seg, i);
    }
  }
  auto project = [&](const RowMatrix &w) {
    std::vector<std::vector<double>> out(n, std::vector<double>(d, 0.0));
    for (int t = 0; t < n; ++t)
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) out[t][j] += h[t][i] * w(i, j);
    return out;
  };
  auto q = project(p.query), k = project(p.key), v = project(p.value);
  std::vector<std::vector<double>> r = h;
  for (int t = 0; t < n; ++t) {
    std::vector<double> a(n);
    double top = -1e300, total = 0;
    for (int s = 0; s < n; ++s) {
      a[s] = 0;
      for (int i = 0; i < d; ++i) a[s] += q[t][i] * k[s][i];
      a[s] /= std::sqrt(double(d));
      top = std::max(top, a[s]);
    }
    for (int s = 0; s < n; ++s) total += a[s] = std::exp(a[s] - top);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < d; ++i) r[t][i] += a[s] / total * v[s][i];
  }
  Oracle o;
  o.pooled.assign(d, 0.0);
  for (int t = in.begin(); t < in.end(); ++t)
    for (int i = 0; i < d; ++i) o.pooled[i] += r[t][i] / (in.end() - in.begin());
  const int c = model.num_categories();
  std::vector<double> logits(c);
  double total = 0;
  for (int j = 0; j < c; ++j) {
    logits[j] = p.bias(j);
    for (int i = 0; i < d; ++i) logits[j] += p.head(j, i) * o.pooled[i];
  }
  for (int j = 0; j < c; ++j) total += std::exp(logits[j]);
  for (int j = 0; j < c; ++j) o.probs.push_back(std::exp(logits[j]) / total);
  return o;
}

// Random weights everywhere, including the zero-initialized segment rows.
ReferenceEncoder RandomModel(int dim, int classes, uint64_t seed) {
  ReferenceEncoder model(SmallVocab(), dim, classes, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> normal(0, 0.5);
  for (Eigen::Index i = 0; i < model.params().segment.size(); ++i) {
    model.params().segment.data()[i] = normal(rng);
  }
  for (Eigen::Index i = 0; i < model.params().head.size(); ++i) {
    model.params().head.data()[i] = normal(rng);
  }
  for (Eigen::Index i = 0; i < model.params().bias.size(); ++i) {
    model.params().bias(i) = normal(rng);
  }
  return model;
}

TEST(EncoderTest, ForwardMatchesHandOracle) {
  ReferenceEncoder model = RandomModel(4, 3, 1);
  for (const auto &in : {Input({1, 2, 4}), Input({1, 2, 4}, std::make_pair(1, 3)),
                         Input({3, 0, 2}, std::make_pair(2, 3))}) {
    Oracle o = ForwardOracle(model, in);
    Eigen::VectorXd enc = model.Encode(in);
    auto probs = model.Predict(in);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(enc(i), o.pooled[i], 1e-12);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(probs[j], o.probs[j], 1e-12);
  }
}

TEST(EncoderTest, PredictIsADistribution) {
  ReferenceEncoder model = RandomModel(8, 5, 2);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> ids(1 + rng() % 12);
    for (int &id : ids) id = static_cast<int>(rng() % 5);
    auto y = model.Predict(Input(ids));
    double total = 0;
    for (double v : y) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(EncoderTest, SingleTokenSpanIsThatTokensRepresentation) {
  ReferenceEncoder model = RandomModel(6, 2, 4);
  const ClassifierInput one = Input({1, 2, 3, 4}, std::make_pair(2, 3));
  Oracle o = ForwardOracle(model, one);
  Eigen::VectorXd a = EmbedPhrase(model, one), b = EmbedPhrase(model, one);
  EXPECT_EQ(a, b);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(a(i), o.pooled[i], 1e-12);
  EXPECT_EQ(a.size(), model.representation_dim());
}

TEST(EncoderTest, InputValidation) {
  ReferenceEncoder model = RandomModel(4, 2, 5);
  EXPECT_THROW(model.Predict(Input({})), ValidationError);
  EXPECT_THROW(model.Predict(Input({1, 2}, std::make_pair(1, 3))), ValidationError);
  EXPECT_THROW(model.Predict(Input({1, 2}, std::make_pair(1, 1))), ValidationError);
}

double GradientError(const std::vector<double> &analytic, const std::vector<double> &numeric) {
  double diff = 0, a = 0, n = 0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    a += analytic[i] * analytic[i];
    n += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(a), std::sqrt(n), 1e-12});
}

TEST(EncoderTest, GradientsMatchFiniteDifferences) {
  ReferenceEncoder model = RandomModel(6, 3, 6);
  const ClassifierInput in = Input({1, 4, 2}, std::make_pair(1, 3));
  const std::vector<double> target = {0.7, 0.2, 0.1};
  EncoderParams grad;
  grad.SetZero(model.params());
  model.LossAndGradient(in, target, &grad);

  auto check = [&](RowMatrix &param, const RowMatrix &analytic, const char *name) {
    std::vector<double> a, n;
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      const double h = 1e-6;
      param.data()[i] = saved + h;
      const double up = model.LossAndGradient(in, target, nullptr);
      param.data()[i] = saved - h;
      const double down = model.LossAndGradient(in, target, nullptr);
      param.data()[i] = saved;
      n.push_back((up - down) / (2 * h));
      a.push_back(analytic.data()[i]);
    }
    EXPECT_LT(GradientError(a, n), 1e-3) << name;
  };
  EncoderParams &p = model.params();
  check(p.embedding, grad.embedding, "embedding");
  check(p.segment, grad.segment, "segment");
  check(p.query, grad.query, "query");
  check(p.key, grad.key, "key");
  check(p.value, grad.value, "value");
  check(p.head, grad.head, "head");
  RowMatrix bias = p.bias.transpose();
  std::vector<double> a(grad.bias.data(), grad.bias.data() + grad.bias.size()), n;
  for (int j = 0; j < 3; ++j) {
    const double saved = p.bias(j);
    p.bias(j) = saved + 1e-6;
    const double up = model.LossAndGradient(in, target, nullptr);
    p.bias(j) = saved - 1e-6;
    const double down = model.LossAndGradient(in, target, nullptr);
    p.bias(j) = saved;
    n.push_back((up - down) / 2e-6);
  }
  EXPECT_LT(GradientError(a, n), 1e-3) << "bias";
}

TEST(ClassifyTest, ThresholdAndTieBreak) {
  EXPECT_EQ(ClassifyDistribution(std::vector<double>(5, 0.2), 0.30), std::nullopt);
  EXPECT_EQ(ClassifyDistribution(std::vector<double>{0.05, 0.9, 0.05}, 0.30), 1);
  EXPECT_EQ(ClassifyDistribution(std::vector<double>{0.2, 0.30, 0.30, 0.1, 0.1}, 0.30), 1);
  EXPECT_EQ(ClassifyDistribution(std::vector<double>{0.30, 0.30, 0.2, 0.1, 0.1}, 0.30), 0);

  ReferenceEncoder model = RandomModel(4, 3, 7);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const ClassifierInput in = Input({int(rng() % 5), int(rng() % 5)});
    EXPECT_TRUE(ClassifyPhrase(model, in, 0.0).has_value());
    EXPECT_FALSE(ClassifyPhrase(model, in, 1.01).has_value());
  }
}

class TrainingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticSpec spec;
    spec.n_sentences = 300;
    corpus_ = GenerateSynthetic(spec, 5);
    vocab_ = EncoderVocab(corpus_.sentences, 1);
  }

  // Gold-derived soft targets stand in for embedding pseudo-labels.
  std::vector<PseudoSentenceLabel> GoldLabels() const {
    std::vector<PseudoSentenceLabel> labels;
    for (size_t i = 0; i < corpus_.sentences.size(); ++i) {
      std::vector<double> dist(2, 0.1);
      dist[corpus_.gold_aspect[i]] = 0.9;
      labels.push_back({corpus_.sentences[i].id, corpus_.gold_aspect[i], dist});
    }
    return labels;
  }

  SyntheticCorpus corpus_;
  std::vector<std::string> vocab_;
};

TEST_F(TrainingTest, LossDecreasesAcrossEpochs) {
  ReferenceEncoder model(vocab_, 16, 2, 1);
  TrainConfig config;
  config.epochs = 3;
  auto report = TrainOnSentences(model, GoldLabels(), corpus_.sentences, config);
  ASSERT_EQ(report.epoch_loss.size(), 3u);
  EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front());
}

TEST_F(TrainingTest, EmptyInputLeavesModelUnchanged) {
  ReferenceEncoder model(vocab_, 8, 2, 1);
  const EncoderParams before = model.params();
  auto report = TrainOnSentences(model, {}, corpus_.sentences, TrainConfig{});
  EXPECT_TRUE(report.batch_loss.empty());
  EXPECT_TRUE(model.params().embedding == before.embedding);
  FinetuneOnPhrases(model, {}, {}, corpus_.sentences, TrainConfig{});
  EXPECT_TRUE(model.params().head == before.head);
}

TEST_F(TrainingTest, DeterministicAndThreadIndependent) {
  auto train = [&](int threads) {
    ReferenceEncoder model(vocab_, 8, 2, 3);
    TrainOnSentences(model, GoldLabels(), corpus_.sentences, TrainConfig{}, threads);
    return model.params();
  };
  const EncoderParams a = train(0), b = train(0), c = train(3);
  EXPECT_TRUE(a.query == b.query && a.embedding == b.embedding);
  EXPECT_LT((a.query - c.query).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(TrainingTest, UnknownSentenceIsRejected) {
  ReferenceEncoder model(vocab_, 8, 2, 1);
  std::vector<PseudoSentenceLabel> labels = {{"nope", 0, {0.5, 0.5}}};
  EXPECT_THROW(TrainOnSentences(model, labels, corpus_.sentences, TrainConfig{}),
               ValidationError);
}

TEST_F(TrainingTest, BackgroundPhrasesFlattenPredictions) {
  ReferenceEncoder model(vocab_, 16, 2, 2);
  TrainConfig config;
  config.epochs = 2;
  TrainOnSentences(model, GoldLabels(), corpus_.sentences, config);
  auto phrases = ExtractCorpus(corpus_.sentences, 0);
  phrases.resize(300);
  std::unordered_map<std::string, const Sentence *> by_id;
  for (const auto &s : corpus_.sentences) by_id[s.id] = &s;
  auto mean_max = [&] {
    double total = 0;
    for (const Phrase &p : phrases) {
      auto y = model.Predict(model.Tokenize(*by_id[p.sentence_id], p));
      total += *std::max_element(y.begin(), y.end());
    }
    return total / phrases.size();
  };
  const double before = mean_max();
  std::vector<PseudoPhraseLabel> labels;
  for (const Phrase &p : phrases) {
    labels.push_back({p.id, PhraseOutcome::kBackground, {0.5, 0.5}});
  }
  FinetuneOnPhrases(model, labels, phrases, corpus_.sentences, config);
  EXPECT_LT(mean_max(), before);
}

TEST_F(TrainingTest, BatchLossIsMeanOfItemLosses) {
  ReferenceEncoder model(vocab_, 8, 2, 4);
  auto phrases = ExtractCorpus(corpus_.sentences, 0);
  phrases.resize(10);
  std::unordered_map<std::string, const Sentence *> by_id;
  for (const auto &s : corpus_.sentences) by_id[s.id] = &s;
  std::vector<PseudoPhraseLabel> labels;
  double expected = 0;
  for (size_t i = 0; i < phrases.size(); ++i) {
    PseudoPhraseLabel label{phrases[i].id, i % 3 == 0 ? PhraseOutcome::kBackground
                                                      : PhraseOutcome::kSoft,
                            {0.5, 0.5}};
    if (label.outcome == PhraseOutcome::kSoft) label.distribution = {0.8, 0.2};
    auto y = model.Predict(model.Tokenize(*by_id[phrases[i].sentence_id], phrases[i]));
    expected += DistillLoss(label.distribution, y);
    labels.push_back(label);
  }
  labels.push_back({"ignored", PhraseOutcome::kExcluded, {}});
  TrainConfig config;
  config.batch_size = 64;
  config.epochs = 1;
  auto report = FinetuneOnPhrases(model, labels, phrases, corpus_.sentences, config);
  ASSERT_EQ(report.batch_loss.size(), 1u);
  EXPECT_NEAR(report.batch_loss[0], expected / phrases.size(), 1e-12);
}

TEST_F(TrainingTest, TokenizeMapsUnknownsAndPhraseExtent) {
  ReferenceEncoder model(std::vector<std::string>{"<unk>", "the"}, 4, 2, 1);
  const Sentence &s = corpus_.sentences[0];
  auto in = model.Tokenize(s);
  ASSERT_EQ(in.token_ids.size(), s.tokens.size());
  EXPECT_FALSE(in.span.has_value());
  for (size_t t = 0; t < s.tokens.size(); ++t) {
    EXPECT_EQ(in.token_ids[t], FoldCase(s.tokens[t].surface) == "the" ? 1 : 0);
  }
  Phrase p = MakePhrase(s, {1, 3}, PhraseSource::kDependency);
  auto span = model.Tokenize(s, p).span;
  ASSERT_TRUE(span.has_value());
  EXPECT_EQ(*span, std::make_pair(1, 4));
}

TEST(CheckpointTest, RoundTripAtFloatPrecision) {
  ReferenceEncoder model = RandomModel(6, 3, 9);
  model.schema_hash = 0xabcdef0123456789ull;
  std::stringstream buffer;
  model.Save(buffer);
  ReferenceEncoder back = ReferenceEncoder::Load(buffer);
  EXPECT_EQ(back.vocab(), model.vocab());
  EXPECT_EQ(back.schema_hash, model.schema_hash);
  EXPECT_EQ(back.seed, model.seed);
  EXPECT_EQ(back.parameter_count(), model.parameter_count());
  const RowMatrix rounded = model.params().query.cast<float>().cast<double>();
  EXPECT_TRUE(back.params().query == rounded);
  const auto in = Input({1, 2, 3});
  auto a = model.Predict(in), b = back.Predict(in);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(a[j], b[j], 1e-5);

  // Saving the loaded model reproduces the bytes exactly.
  std::stringstream again;
  back.Save(again);
  EXPECT_EQ(again.str(), buffer.str());
}

TEST(CheckpointTest, RejectsCorruptFiles) {
  ReferenceEncoder model = RandomModel(4, 2, 10);
  std::stringstream buffer;
  model.Save(buffer);
  std::string bytes = buffer.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(ReferenceEncoder::Load(truncated), ParseError);
  std::stringstream trailing(bytes + "xx");
  EXPECT_THROW(ReferenceEncoder::Load(trailing), ParseError);
  std::stringstream garbage("not json\n");
  EXPECT_THROW(ReferenceEncoder::Load(garbage), ParseError);
}

}  // namespace
}  // namespace opsum
