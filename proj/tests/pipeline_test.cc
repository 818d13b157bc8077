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

#include "opsum/pipeline.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <gtest/gtest.h>

#include "opsum/io.h"
#include "test_util.h"

namespace opsum {
namespace {

using testing::ReadFile;
using testing::SyntheticConfig;
using testing::TempDir;

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticSpec spec;
    spec.n_sentences = 300;
    corpus_ = GenerateSynthetic(spec, 21);
    config_ = SyntheticConfig(corpus_, dir_.path(), dir_ / "work");
    config_.embed.dim = 24;
    config_.embed.epochs = 4;
    config_.encoder.dim = 16;
    config_.train.epochs = 1;
    config_.seed = 7;
  }

  static std::vector<std::string> Ran(const std::vector<StageResult> &results) {
    std::vector<std::string> names;
    for (const auto &r : results) {
      if (r.ran) names.push_back(r.name);
    }
    return names;
  }

  TempDir dir_;
  SyntheticCorpus corpus_;
  PipelineConfig config_;
};

TEST_F(PipelineTest, FullRunPlacesEachLabeledPhraseOnce) {
  auto results = RunPipeline(config_);
  EXPECT_EQ(Ran(results), StageNames());
  Artifacts files(config_.paths.workdir);
  ASSERT_TRUE(std::filesystem::exists(files.summary()));

  std::map<std::string, int> expected;  // phrases labeled in both schemas
  std::ifstream labels(files.labels());
  for (std::string line; std::getline(labels, line);) {
    auto row = nlohmann::json::parse(line);
    if (!row["aspect"].is_null() && !row["sentiment"].is_null()) {
      expected[row["id"].get<std::string>()] = 0;
    }
  }
  ASSERT_FALSE(expected.empty());
  auto summary = nlohmann::json::parse(ReadFile(files.summary()));
  std::map<std::string, int> seen;
  for (const auto &target : summary["targets"]) {
    for (const auto &[key, clusters] : target["groups"].items()) {
      for (const auto &cluster : clusters) {
        EXPECT_EQ(cluster["phrase_ids"].size(), cluster["phrases"].size());
        for (const auto &id : cluster["phrase_ids"]) ++seen[id.get<std::string>()];
      }
    }
  }
  for (auto &[id, count] : seen) EXPECT_EQ(count, 1) << id;
  EXPECT_EQ(seen.size(), expected.size());
  for (const auto &[id, count] : expected) EXPECT_TRUE(seen.count(id)) << id;
}

TEST_F(PipelineTest, ResumeRerunsOnlyWhatIsStale) {
  RunPipeline(config_);
  Artifacts files(config_.paths.workdir);
  const std::string before = ReadFile(files.summary());

  EXPECT_TRUE(Ran(RunPipeline(config_)).empty());

  std::filesystem::remove(files.clusters());
  EXPECT_EQ(Ran(RunPipeline(config_)), (std::vector<std::string>{"cluster", "summarize"}));
  EXPECT_EQ(ReadFile(files.summary()), before);

  // A clustering parameter change invalidates only the clustering stages.
  config_.cluster.threshold = 3.0;
  EXPECT_EQ(Ran(RunPipeline(config_)), (std::vector<std::string>{"cluster", "summarize"}));

  RunOptions force;
  force.only = {"classify"};
  force.force = true;
  EXPECT_EQ(Ran(RunPipeline(config_, force)), std::vector<std::string>{"classify"});

  // Running one stage refuses to build on a stale upstream stage.
  RunOptions summarize_only;
  summarize_only.only = {"summarize"};
  config_.cluster.threshold = 5.0;
  EXPECT_THROW(RunPipeline(config_, summarize_only), StageError);
}

TEST_F(PipelineTest, MissingSchemaFailsBeforeWriting) {
  config_.paths.sentiment_schema = dir_ / "nope.txt";
  EXPECT_THROW(RunPipeline(config_), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(config_.paths.workdir));
}

TEST_F(PipelineTest, IndependentInstancesDoNotShareState) {
  PipelineConfig a = config_, b = config_;
  a.paths.workdir = dir_ / "a";
  b.paths.workdir = dir_ / "b";
  PipelineConfig solo = config_;
  solo.paths.workdir = dir_ / "solo";
  RunPipeline(solo);
  std::thread ta([&] { RunPipeline(a); });
  std::thread tb([&] { RunPipeline(b); });
  ta.join();
  tb.join();
  const std::string expected = ReadFile(Artifacts(solo.paths.workdir).summary());
  EXPECT_EQ(ReadFile(Artifacts(a.paths.workdir).summary()), expected);
  EXPECT_EQ(ReadFile(Artifacts(b.paths.workdir).summary()), expected);
}

TEST(ConfigTest, JsonRoundTripAndUnknownKeys) {
  PipelineConfig config;
  config.paths.corpus = "c.conllu";
  config.embed.dim = 33;
  config.distill.theta1 = 0.4;
  config.cluster.linkage = Linkage::kAverage;
  config.seed = 99;
  auto j = ConfigToJson(config);
  auto back = ConfigFromJson(j);
  EXPECT_EQ(ConfigToJson(back), j);
  j["embed"]["dimension"] = 3;
  EXPECT_THROW(ConfigFromJson(j), ValidationError);
  EXPECT_THROW(ConfigFromJson(nlohmann::json{{"bogus", 1}}), ValidationError);
}

TEST(ConfigTest, SeedPrecedence) {
  unsetenv(kSeedEnv);
  EXPECT_EQ(ResolveSeed(std::nullopt, 5), 5u);
  setenv(kSeedEnv, "11", 1);
  EXPECT_EQ(ResolveSeed(std::nullopt, 5), 11u);
  EXPECT_EQ(ResolveSeed(3, 5), 3u);
  setenv(kSeedEnv, "eleven", 1);
  EXPECT_THROW(ResolveSeed(std::nullopt, 5), ValidationError);
  unsetenv(kSeedEnv);
}

TEST(ConfigTest, RelativePathsResolveAgainstConfigFile) {
  TempDir dir;
  {
    std::ofstream out(dir / "config.json");
    out << R"({"paths": {"corpus": "data/c.conllu", "workdir": "work"}, "seed": 4})";
  }
  PipelineConfig config = LoadConfigFile(dir / "config.json");
  EXPECT_EQ(config.paths.corpus, dir / "data/c.conllu");
  EXPECT_EQ(config.paths.workdir, dir / "work");
  EXPECT_EQ(config.seed, 4u);
}

TEST(SyntheticTest, GeneratorContract) {
  SyntheticSpec spec;
  SyntheticCorpus corpus = GenerateSynthetic(spec, 3);
  EXPECT_EQ(corpus.sentences.size(), 2000u);
  ASSERT_EQ(corpus.aspects.categories.size(), 2u);
  for (const auto &c : corpus.aspects.categories) EXPECT_EQ(c.keywords.size(), 4u);
  for (const auto &s : corpus.sentences) EXPECT_TRUE(s.tree.has_value());

  TempDir a, b;
  WriteSynthetic(corpus, a.path());
  WriteSynthetic(GenerateSynthetic(spec, 3), b.path());
  for (const char *name : {"corpus.conllu", "corpus.trees", "aspects.txt", "sentiments.txt",
                           "gold_sentences.jsonl", "gold_phrases.jsonl"}) {
    EXPECT_EQ(ReadFile(a / name), ReadFile(b / name)) << name;
  }
}

TEST(SyntheticTest, NoiseFreeSentencesUseOneCategory) {
  SyntheticSpec spec;
  spec.noise_word_ratio = 0;
  spec.n_sentences = 400;
  SyntheticCorpus corpus = GenerateSynthetic(spec, 4);
  std::map<std::string, int> owner;
  for (size_t c = 0; c < corpus.aspect_vocab.size(); ++c)
    for (const auto &w : corpus.aspect_vocab[c]) owner[w] = static_cast<int>(c);
  for (size_t i = 0; i < corpus.sentences.size(); ++i) {
    for (const auto &t : corpus.sentences[i].tokens) {
      auto it = owner.find(t.surface);
      if (it != owner.end()) EXPECT_EQ(it->second, corpus.gold_aspect[i]) << t.surface;
    }
  }
}

}  // namespace
}  // namespace opsum
