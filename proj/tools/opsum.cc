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

// Command-line driver for the opinion summarization pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "opsum/corpus.h"
#include "opsum/evaluation.h"
#include "opsum/io.h"
#include "opsum/pipeline.h"
#include "opsum/synthetic.h"

namespace {

using nlohmann::json;
using opsum::PipelineConfig;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitStage = 2;

// Flags shared by every pipeline subcommand. Unset flags leave the config
// file's values alone.
struct Overrides {
  std::string config;
  std::optional<std::string> corpus, trees, aspects, sentiments, workdir;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> dim, window, epochs, negatives;
  std::optional<double> embed_lr;
  std::optional<int> top_k;
  std::optional<double> alpha, theta1, theta2;
  std::optional<double> lr;
  std::optional<int> batch_size, train_epochs, encoder_dim;
  std::optional<double> tc;
  std::optional<std::string> linkage;
  bool force = false;

  void Register(CLI::App *app) {
    app->add_option("-c,--config", config, "pipeline config (JSON)");
    app->add_option("--corpus", corpus, "CoNLL-U corpus");
    app->add_option("--trees", trees, "bracketed trees, one per sentence");
    app->add_option("--aspects", aspects, "aspect schema file");
    app->add_option("--sentiments", sentiments, "sentiment schema file");
    app->add_option("-w,--workdir", workdir, "artifact directory");
    app->add_option("--seed", seed, "global seed (overrides OPSUM_SEED and config)");
    app->add_option("--threads", threads, "0 = deterministic single-threaded");
    app->add_option("--dim", dim, "sphere embedding dimension");
    app->add_option("--window", window, "context window");
    app->add_option("--epochs", epochs, "embedding epochs");
    app->add_option("--negatives", negatives, "negatives per positive");
    app->add_option("--embed-lr", embed_lr, "embedding learning rate");
    app->add_option("--k", top_k, "pseudo-labeled sentences per category");
    app->add_option("--alpha", alpha, "softmax temperature");
    app->add_option("--theta1", theta1, "classifier agreement threshold");
    app->add_option("--theta2", theta2, "similarity / inference threshold");
    app->add_option("--lr", lr, "classifier learning rate");
    app->add_option("--batch-size", batch_size, "classifier minibatch size");
    app->add_option("--train-epochs", train_epochs, "classifier epochs");
    app->add_option("--encoder-dim", encoder_dim, "classifier representation size");
    app->add_option("--tc", tc, "clustering distance threshold");
    app->add_option("--linkage", linkage, "complete | average | single")
        ->check(CLI::IsMember({"complete", "average", "single"}));
    app->add_flag("--force", force, "re-run even if artifacts are current");
  }

  PipelineConfig Resolve() const {
    PipelineConfig c = config.empty() ? PipelineConfig{} : opsum::LoadConfigFile(config);
    if (corpus) c.paths.corpus = *corpus;
    if (trees) c.paths.trees = *trees;
    if (aspects) c.paths.aspect_schema = *aspects;
    if (sentiments) c.paths.sentiment_schema = *sentiments;
    if (workdir) c.paths.workdir = *workdir;
    c.seed = opsum::ResolveSeed(seed, c.seed);
    if (threads) c.threads = *threads;
    if (dim) c.embed.dim = *dim;
    if (window) c.embed.window = *window;
    if (epochs) c.embed.epochs = *epochs;
    if (negatives) c.embed.negatives = *negatives;
    if (embed_lr) c.embed.learning_rate = *embed_lr;
    if (top_k) c.distill.top_k = *top_k;
    if (alpha) c.distill.alpha = *alpha;
    if (theta1) c.distill.theta1 = *theta1;
    if (theta2) c.distill.theta2 = *theta2;
    if (lr) c.train.learning_rate = *lr;
    if (batch_size) c.train.batch_size = *batch_size;
    if (train_epochs) c.train.epochs = *train_epochs;
    if (encoder_dim) c.encoder.dim = *encoder_dim;
    if (tc) c.cluster.threshold = *tc;
    if (linkage) c.cluster.linkage = opsum::ParseLinkage(*linkage);
    return c;
  }
};

void RunStages(const Overrides &o, std::vector<std::string> only) {
  PipelineConfig config = o.Resolve();
  opsum::RunOptions options{std::move(only), o.force};
  for (const auto &r : opsum::RunPipeline(config, options)) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), r.name) == options.only.end()) {
      continue;
    }
    std::printf("%-17s %s\n", r.name.c_str(), r.ran ? "ran" : "up to date");
  }
}

void PrintSummary(const Overrides &o, const std::string &target) {
  const PipelineConfig config = o.Resolve();
  const opsum::Artifacts files(config.paths.workdir);
  const json summary = json::parse(opsum::ReadFileToString(files.summary()));
  for (const json &t : summary.at("targets")) {
    if (target.empty() || t.at("target") == target) std::cout << t.dump(2) << "\n";
  }
}

std::vector<json> ReadRows(const std::string &path) { return opsum::ReadJsonLines(path); }

opsum::GoldLabels GoldFrom(const json &value) {
  if (value.is_null()) return {};
  if (value.is_array()) return value.get<std::vector<std::string>>();
  return {value.get<std::string>()};
}

void EvalClassify(const std::string &pred_path, const std::string &gold_path,
                  const std::string &field, const std::string &schema_path) {
  std::map<std::string, opsum::Prediction> predicted;
  for (const json &row : ReadRows(pred_path)) {
    const json &v = row.at(field);
    predicted[row.at("id").get<std::string>()] =
        v.is_null() ? opsum::Prediction() : opsum::Prediction(v.get<std::string>());
  }
  std::vector<opsum::Prediction> preds;
  std::vector<opsum::GoldLabels> gold;
  std::set<std::string> seen;
  for (const json &row : ReadRows(gold_path)) {
    const std::string id = row.at("id").get<std::string>();
    auto it = predicted.find(id);
    if (it == predicted.end()) throw opsum::ValidationError("no prediction for " + id);
    preds.push_back(it->second);
    gold.push_back(GoldFrom(row.at(field)));
    for (const auto &g : gold.back()) seen.insert(g);
  }
  std::vector<std::string> classes;
  if (!schema_path.empty()) {
    const auto kind = field == "sentiment" ? opsum::SchemaKind::kSentiment
                                           : opsum::SchemaKind::kAspect;
    for (const auto &c : opsum::LoadSchemaFile(schema_path, kind).categories) {
      classes.push_back(c.name);
    }
  } else {
    classes.assign(seen.begin(), seen.end());
  }
  const auto report = opsum::ClassificationMetrics(preds, gold, classes);
  std::cout << json{{"n", preds.size()},
                    {"accuracy", report.accuracy},
                    {"precision", report.precision},
                    {"recall", report.recall},
                    {"macro_f1", report.macro_f1}}
                   .dump(2)
            << "\n";
}

// Every cluster of every group and target, as phrase surfaces.
std::vector<std::vector<std::string>> SummaryClusters(const std::string &path) {
  const json summary = json::parse(opsum::ReadFileToString(path));
  std::vector<std::vector<std::string>> clusters;
  for (const json &t : summary.at("targets")) {
    for (const auto &[key, list] : t.at("groups").items()) {
      for (const json &c : list) clusters.push_back(c.at("phrases").get<std::vector<std::string>>());
    }
  }
  return clusters;
}

void EvalDiversity(const std::string &path) {
  const auto clusters = SummaryClusters(path);
  double total = 0;
  for (const auto &c : clusters) total += opsum::Diversity(c);
  std::cout << json{{"clusters", clusters.size()},
                    {"mean_diversity", clusters.empty() ? 0.0 : total / clusters.size()}}
                   .dump(2)
            << "\n";
}

void EvalIntrusionMake(const std::string &summary, int n, uint64_t seed,
                       const std::string &sets_path, const std::string &key_path) {
  const auto clusters = SummaryClusters(summary);
  std::vector<json> sets, keys;
  for (int i = 0; i < n; ++i) {
    auto set = opsum::MakeIntrusionSet(clusters, seed + i);
    if (!set) break;  // infeasibility does not depend on the seed
    sets.push_back(opsum::IntrusionSetToJson(*set));
    keys.push_back(opsum::IntrusionKeyToJson(*set));
  }
  opsum::WriteJsonLines(sets_path, sets);
  opsum::WriteJsonLines(key_path, keys);
  std::printf("wrote %zu intrusion sets%s\n", sets.size(),
              sets.empty() ? " (infeasible: no cluster shares a word with another)" : "");
}

void EvalIntrusionScore(const std::string &sets_path, const std::string &key_path,
                        const std::string &answers_path) {
  const auto sets = ReadRows(sets_path);
  const auto keys = ReadRows(key_path);
  if (sets.size() != keys.size()) throw opsum::ValidationError("sets and key differ in length");
  std::vector<opsum::IntrusionSet> parsed;
  for (size_t i = 0; i < sets.size(); ++i) {
    parsed.push_back(opsum::IntrusionSetFromJson(sets[i], keys[i]));
  }
  const auto answers =
      json::parse(opsum::ReadFileToString(answers_path)).get<std::vector<int>>();
  std::cout << json{{"coherence", opsum::CoherenceScore(parsed, answers)}}.dump(2) << "\n";
}

void Synth(const opsum::SyntheticSpec &spec, uint64_t seed, const std::string &dir) {
  spec.Validate();
  const auto corpus = opsum::GenerateSynthetic(spec, seed);
  opsum::WriteSynthetic(corpus, dir);
  PipelineConfig config;
  config.paths = {"corpus.conllu", "corpus.trees", "aspects.txt", "sentiments.txt", "work"};
  config.seed = seed;
  opsum::WriteFileAtomic(dir + "/config.json", [&](std::ostream &out) {
    out << opsum::ConfigToJson(config).dump(2) << "\n";
  });
  std::printf("wrote %zu sentences to %s\n", corpus.sentences.size(), dir.c_str());
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Aspect-based fine-grained opinion summarization"};
  app.require_subcommand(1);

  Overrides overrides;
  std::map<std::string, CLI::App *> stages;
  for (const std::string &name : opsum::StageNames()) {
    stages[name] = app.add_subcommand(name, "run the " + name + " stage");
    overrides.Register(stages[name]);
  }
  std::string summary_target;
  stages["summarize"]->add_option("--target", summary_target, "print only this target");
  CLI::App *run = app.add_subcommand("run", "run every stage that is out of date");
  overrides.Register(run);

  CLI::App *eval = app.add_subcommand("eval", "evaluation tools");
  eval->require_subcommand(1);
  std::string pred, gold, field = "aspect", schema, summary, sets = "intrusion_sets.jsonl",
                                  key = "intrusion_key.jsonl", answers;
  CLI::App *classify = eval->add_subcommand("classify", "accuracy / precision / recall / F1");
  classify->add_option("--pred", pred, "predictions (labels.jsonl)")->required();
  classify->add_option("--gold", gold, "gold labels, JSON lines with id and label")->required();
  classify->add_option("--field", field, "aspect | sentiment");
  classify->add_option("--schema", schema, "schema file listing the classes");
  CLI::App *diversity = eval->add_subcommand("diversity", "unique-word ratio per cluster");
  diversity->add_option("--summary", summary)->required();
  CLI::App *intrusion = eval->add_subcommand("intrusion", "word intrusion sets");
  intrusion->require_subcommand(1);
  int n_sets = 40;
  uint64_t intrusion_seed = 1;
  CLI::App *make = intrusion->add_subcommand("make", "generate sets and a sealed key");
  make->add_option("--summary", summary)->required();
  make->add_option("--n", n_sets);
  make->add_option("--seed", intrusion_seed);
  make->add_option("--out", sets);
  make->add_option("--key", key);
  CLI::App *score = intrusion->add_subcommand("score", "coherence from judge answers");
  score->add_option("--sets", sets);
  score->add_option("--key", key);
  score->add_option("--answers", answers, "JSON array of chosen indices")->required();

  opsum::SyntheticSpec spec;
  uint64_t synth_seed = 7;
  std::string synth_dir;
  CLI::App *synth = app.add_subcommand("synth", "write a planted synthetic corpus");
  synth->add_option("--out", synth_dir)->required();
  synth->add_option("--seed", synth_seed);
  synth->add_option("--sentences", spec.n_sentences);
  synth->add_option("--categories", spec.n_categories);
  synth->add_option("--vocab", spec.vocab_per_category);
  synth->add_option("--keywords", spec.keywords_per_category);
  synth->add_option("--noise", spec.noise_word_ratio);
  synth->add_option("--min-length", spec.min_length);
  synth->add_option("--max-length", spec.max_length);
  synth->add_option("--targets", spec.n_targets);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (const auto &[name, sub] : stages) {
      if (!sub->parsed()) continue;
      RunStages(overrides, {name});
      if (name == "summarize") PrintSummary(overrides, summary_target);
    }
    if (run->parsed()) RunStages(overrides, {});
    if (classify->parsed()) EvalClassify(pred, gold, field, schema);
    if (diversity->parsed()) EvalDiversity(summary);
    if (make->parsed()) EvalIntrusionMake(summary, n_sets, intrusion_seed, sets, key);
    if (score->parsed()) EvalIntrusionScore(sets, key, answers);
    if (synth->parsed()) Synth(spec, synth_seed, synth_dir);
  } catch (const opsum::StageError &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  } catch (const opsum::ValidationError &e) {
    std::fprintf(stderr, "invalid: %s\n", e.what());
    return kExitValidation;
  } catch (const opsum::ParseError &e) {
    std::fprintf(stderr, "invalid: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  }
  return kExitOk;
}
