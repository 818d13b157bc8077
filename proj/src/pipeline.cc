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
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "opsum/corpus.h"
#include "opsum/extraction.h"
#include "opsum/io.h"
#include "opsum/parallel.h"
#include "opsum/vocab.h"

namespace opsum {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr SchemaKind kKinds[] = {SchemaKind::kAspect, SchemaKind::kSentiment};

void RejectUnknown(const json &j, std::initializer_list<std::string_view> known,
                   const std::string &section) {
  if (!j.is_object()) throw ValidationError("config: '" + section + "' must be an object");
  for (const auto &[key, value] : j.items()) {
    bool found = false;
    for (std::string_view k : known) found = found || k == key;
    if (!found) throw ValidationError("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void Read(const json &j, const char *key, T &field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

json EmbedToJson(const EmbedConfig &c) {
  return {{"dim", c.dim},
          {"window", c.window},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"negatives", c.negatives},
          {"m_inter", c.m_inter},
          {"m_intra", c.m_intra},
          {"warmup_epochs", c.warmup_epochs},
          {"concentration", c.concentration},
          {"refine_iterations", c.refine_iterations},
          {"refine_lr_scale", c.refine_lr_scale},
          {"category_lr_scale", c.category_lr_scale}};
}

void EmbedFromJson(const json &j, EmbedConfig &c) {
  RejectUnknown(j, {"dim", "window", "epochs", "learning_rate", "negatives", "m_inter",
                    "m_intra", "warmup_epochs", "concentration", "refine_iterations",
                    "refine_lr_scale", "category_lr_scale"},
                "embed");
  Read(j, "dim", c.dim);
  Read(j, "window", c.window);
  Read(j, "epochs", c.epochs);
  Read(j, "learning_rate", c.learning_rate);
  Read(j, "negatives", c.negatives);
  Read(j, "m_inter", c.m_inter);
  Read(j, "m_intra", c.m_intra);
  Read(j, "warmup_epochs", c.warmup_epochs);
  Read(j, "concentration", c.concentration);
  Read(j, "refine_iterations", c.refine_iterations);
  Read(j, "refine_lr_scale", c.refine_lr_scale);
  Read(j, "category_lr_scale", c.category_lr_scale);
}

json DistillToJson(const DistillConfig &c) {
  return {{"top_k", c.top_k}, {"alpha", c.alpha}, {"theta1", c.theta1}, {"theta2", c.theta2}};
}

void DistillFromJson(const json &j, DistillConfig &c) {
  RejectUnknown(j, {"top_k", "alpha", "theta1", "theta2"}, "distill");
  Read(j, "top_k", c.top_k);
  Read(j, "alpha", c.alpha);
  Read(j, "theta1", c.theta1);
  Read(j, "theta2", c.theta2);
}

json TrainToJson(const TrainConfig &c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"clip_norm", c.clip_norm}};
}

void TrainFromJson(const json &j, TrainConfig &c) {
  RejectUnknown(j, {"learning_rate", "batch_size", "epochs", "clip_norm"}, "train");
  Read(j, "learning_rate", c.learning_rate);
  Read(j, "batch_size", c.batch_size);
  Read(j, "epochs", c.epochs);
  Read(j, "clip_norm", c.clip_norm);
}

std::string FileDigest(const std::string &path) {
  if (path.empty()) return "";
  return HexDigest(HashBytes(ReadFileToString(path)));
}

}  // namespace

void PipelineConfig::Validate() const {
  embed.Validate();
  distill.Validate();
  train.Validate();
  cluster.Validate();
  if (encoder.dim < 1) throw ValidationError("encoder.dim must be >= 1");
  if (encoder.min_count < 1) throw ValidationError("encoder.min_count must be >= 1");
  if (threads < 0) throw ValidationError("threads must be >= 0");
  auto require = [](const std::string &path, const char *what) {
    if (path.empty()) throw ValidationError(std::string("missing path: ") + what);
    if (!fs::exists(path)) throw ValidationError(std::string(what) + " not found: " + path);
  };
  require(paths.corpus, "corpus");
  if (!paths.trees.empty()) require(paths.trees, "trees");
  require(paths.aspect_schema, "aspect schema");
  require(paths.sentiment_schema, "sentiment schema");
  if (paths.workdir.empty()) throw ValidationError("missing path: workdir");
}

void PipelineConfig::Propagate() {
  embed.seed = seed;
  embed.threads = threads;
  train.seed = seed;
}

json ConfigToJson(const PipelineConfig &c) {
  return {{"paths",
           {{"corpus", c.paths.corpus},
            {"trees", c.paths.trees},
            {"aspect_schema", c.paths.aspect_schema},
            {"sentiment_schema", c.paths.sentiment_schema},
            {"workdir", c.paths.workdir}}},
          {"embed", EmbedToJson(c.embed)},
          {"distill", DistillToJson(c.distill)},
          {"train", TrainToJson(c.train)},
          {"encoder", {{"dim", c.encoder.dim}, {"min_count", c.encoder.min_count}}},
          {"cluster",
           {{"threshold", c.cluster.threshold}, {"linkage", LinkageName(c.cluster.linkage)}}},
          {"seed", c.seed},
          {"threads", c.threads}};
}

PipelineConfig ConfigFromJson(const json &j) {
  PipelineConfig c;
  RejectUnknown(j, {"paths", "embed", "distill", "train", "encoder", "cluster", "seed",
                    "threads"},
                "config");
  if (j.contains("paths")) {
    const json &p = j["paths"];
    RejectUnknown(p, {"corpus", "trees", "aspect_schema", "sentiment_schema", "workdir"},
                  "paths");
    Read(p, "corpus", c.paths.corpus);
    Read(p, "trees", c.paths.trees);
    Read(p, "aspect_schema", c.paths.aspect_schema);
    Read(p, "sentiment_schema", c.paths.sentiment_schema);
    Read(p, "workdir", c.paths.workdir);
  }
  if (j.contains("embed")) EmbedFromJson(j["embed"], c.embed);
  if (j.contains("distill")) DistillFromJson(j["distill"], c.distill);
  if (j.contains("train")) TrainFromJson(j["train"], c.train);
  if (j.contains("encoder")) {
    RejectUnknown(j["encoder"], {"dim", "min_count"}, "encoder");
    Read(j["encoder"], "dim", c.encoder.dim);
    Read(j["encoder"], "min_count", c.encoder.min_count);
  }
  if (j.contains("cluster")) {
    RejectUnknown(j["cluster"], {"threshold", "linkage"}, "cluster");
    Read(j["cluster"], "threshold", c.cluster.threshold);
    std::string linkage(LinkageName(c.cluster.linkage));
    Read(j["cluster"], "linkage", linkage);
    c.cluster.linkage = ParseLinkage(linkage);
  }
  Read(j, "seed", c.seed);
  Read(j, "threads", c.threads);
  return c;
}

PipelineConfig LoadConfigFile(const std::string &path) {
  json j;
  try {
    j = json::parse(ReadFileToString(path));
  } catch (const json::exception &e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  PipelineConfig config = ConfigFromJson(j);
  // Relative input paths resolve against the config file's directory.
  const fs::path base = fs::path(path).parent_path();
  for (std::string *p : {&config.paths.corpus, &config.paths.trees,
                         &config.paths.aspect_schema, &config.paths.sentiment_schema,
                         &config.paths.workdir}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return config;
}

uint64_t ResolveSeed(std::optional<uint64_t> flag, uint64_t from_config) {
  if (flag) return *flag;
  if (const char *env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    char *end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (*end != '\0') {
      throw ValidationError(std::string(kSeedEnv) + " is not an integer: " + env);
    }
    return value;
  }
  return from_config;
}

const std::vector<std::string> &StageNames() {
  static const std::vector<std::string> names = {
      "extract",         "train-embed",      "pseudo-label",
      "train-classifier", "phrase-labels",   "finetune-phrases",
      "classify",        "cluster",          "summarize"};
  return names;
}

namespace {

// Everything the stages share: config, artifact layout, and lazily loaded
// inputs. Stages always read their inputs back from disk, so a resumed run
// behaves exactly like a fresh one.
class Run {
 public:
  explicit Run(const PipelineConfig &config) : config_(config), files_(config.paths.workdir) {}

  const PipelineConfig &config() const { return config_; }
  const Artifacts &files() const { return files_; }

  const CategorySchema &schema(SchemaKind kind) {
    auto &slot = schemas_[static_cast<int>(kind)];
    if (!slot) {
      slot = LoadSchemaFile(kind == SchemaKind::kAspect ? config_.paths.aspect_schema
                                                        : config_.paths.sentiment_schema,
                            kind);
    }
    return *slot;
  }

  const std::vector<Sentence> &corpus() {
    if (!corpus_) {
      std::ifstream in(files_.corpus());
      if (!in) throw ValidationError("cannot open " + files_.corpus());
      corpus_ = ReadManifest(in);
    }
    return *corpus_;
  }

  const std::vector<Phrase> &phrases() {
    if (!phrases_) {
      std::ifstream in(files_.phrases());
      if (!in) throw ValidationError("cannot open " + files_.phrases());
      phrases_ = ReadPhrases(in);
    }
    return *phrases_;
  }

  const Sentence &sentence(const std::string &id) {
    if (sentence_index_.empty()) {
      for (const Sentence &s : corpus()) sentence_index_.emplace(s.id, &s);
    }
    auto it = sentence_index_.find(id);
    if (it == sentence_index_.end()) throw ValidationError("unknown sentence id " + id);
    return *it->second;
  }

  SphereSpace space(SchemaKind kind) {
    std::ifstream in(files_.space(kind));
    if (!in) throw ValidationError("cannot open " + files_.space(kind));
    return SphereSpace::Load(in);
  }

  void ResetCorpus() {
    corpus_.reset();
    phrases_.reset();
    sentence_index_.clear();
  }

 private:
  const PipelineConfig &config_;
  Artifacts files_;
  std::optional<CategorySchema> schemas_[2];
  std::optional<std::vector<Sentence>> corpus_;
  std::optional<std::vector<Phrase>> phrases_;
  std::unordered_map<std::string, const Sentence *> sentence_index_;
};

struct Stage {
  std::string name;
  std::function<json(Run &)> params;  // hashed into the stage key
  std::function<std::vector<std::string>(const Artifacts &)> outputs;
  std::function<void(Run &)> execute;
};

void ExtractStage(Run &run) {
  const PipelineConfig &c = run.config();
  std::ifstream in(c.paths.corpus);
  if (!in) throw ValidationError("cannot open " + c.paths.corpus);
  std::vector<Sentence> corpus = ParseConllu(in);
  if (!c.paths.trees.empty()) {
    std::ifstream trees(c.paths.trees);
    if (!trees) throw ValidationError("cannot open " + c.paths.trees);
    AttachTrees(trees, corpus);
  }
  std::set<std::string> ids;
  for (const Sentence &s : corpus) {
    ValidateSentence(s);
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sentence id " + s.id);
  }
  if (corpus.empty()) throw ValidationError("corpus has no sentences");
  const std::vector<Phrase> phrases = ExtractCorpus(corpus, c.threads);
  WriteFileAtomic(run.files().corpus(), [&](std::ostream &out) { WriteManifest(corpus, out); });
  WriteFileAtomic(run.files().phrases(), [&](std::ostream &out) { WritePhrases(phrases, out); });
  run.ResetCorpus();
}

void EmbedStage(Run &run) {
  for (SchemaKind kind : kKinds) {
    const CategorySchema &schema = run.schema(kind);
    std::vector<std::string> keywords;
    for (const Category &cat : schema.categories) {
      keywords.insert(keywords.end(), cat.keywords.begin(), cat.keywords.end());
    }
    const Vocabulary vocab = BuildVocab(run.corpus(), 1, keywords);
    std::vector<TrainStats> history;
    const SphereSpace space =
        TrainEmbedding(vocab, schema, run.corpus(), run.config().embed, &history);
    WriteFileAtomic(run.files().space(kind), [&](std::ostream &out) { space.Save(out); });
  }
}

void PseudoLabelStage(Run &run) {
  for (SchemaKind kind : kKinds) {
    const auto labels = PseudoLabelSentences(run.space(kind), run.corpus(), run.config().distill);
    std::vector<json> rows;
    for (const auto &label : labels) rows.push_back(SentenceLabelToJson(label));
    WriteJsonLines(run.files().pseudo(kind), rows);
  }
}

void TrainClassifierStage(Run &run) {
  const PipelineConfig &c = run.config();
  const auto vocab = EncoderVocab(run.corpus(), c.encoder.min_count);
  for (SchemaKind kind : kKinds) {
    std::vector<PseudoSentenceLabel> labels;
    for (const json &row : ReadJsonLines(run.files().pseudo(kind))) {
      labels.push_back(SentenceLabelFromJson(row));
    }
    ReferenceEncoder model(vocab, c.encoder.dim, run.schema(kind).size(), c.seed);
    model.schema_hash = run.schema(kind).Hash();
    TrainOnSentences(model, labels, run.corpus(), c.train, c.threads);
    model.SaveFile(run.files().encoder(kind));
  }
}

void PhraseLabelStage(Run &run) {
  const PipelineConfig &c = run.config();
  for (SchemaKind kind : kKinds) {
    const SphereSpace space = run.space(kind);
    const ReferenceEncoder model = ReferenceEncoder::LoadFile(run.files().encoder(kind));
    std::vector<json> rows;
    for (const Phrase &phrase : run.phrases()) {
      const Sentence &sentence = run.sentence(phrase.sentence_id);
      PseudoPhraseLabel label;
      try {
        const auto similarity = PhraseSimilarity(space, phrase, sentence);
        label = JointAgreementLabel(model.Predict(model.Tokenize(sentence, phrase)),
                                    similarity, c.distill);
      } catch (const ValidationError &) {
        label.outcome = PhraseOutcome::kExcluded;  // no word of the phrase is embedded
      }
      label.phrase_id = phrase.id;
      rows.push_back(PhraseLabelToJson(label));
    }
    WriteJsonLines(run.files().phrase_labels(kind), rows);
  }
}

void FinetuneStage(Run &run) {
  const PipelineConfig &c = run.config();
  for (SchemaKind kind : kKinds) {
    ReferenceEncoder model = ReferenceEncoder::LoadFile(run.files().encoder(kind));
    std::vector<PseudoPhraseLabel> labels;
    for (const json &row : ReadJsonLines(run.files().phrase_labels(kind))) {
      labels.push_back(PhraseLabelFromJson(row));
    }
    FinetuneOnPhrases(model, labels, run.phrases(), run.corpus(), c.train, c.threads);
    model.SaveFile(run.files().finetuned(kind));
  }
}

json NameOrNull(const CategorySchema &schema, std::optional<int> label) {
  return label ? json(schema.name(*label)) : json(nullptr);
}

void ClassifyStage(Run &run) {
  const double theta2 = run.config().distill.theta2;
  const ReferenceEncoder aspect =
      ReferenceEncoder::LoadFile(run.files().finetuned(SchemaKind::kAspect));
  const ReferenceEncoder sentiment =
      ReferenceEncoder::LoadFile(run.files().finetuned(SchemaKind::kSentiment));
  const auto &phrases = run.phrases();
  std::vector<json> rows(phrases.size());
  for (const Phrase &p : phrases) run.sentence(p.sentence_id);  // build index up front
  ParallelFor(phrases.size(), run.config().threads, [&](size_t i) {
    const Phrase &p = phrases[i];
    const Sentence &s = run.sentence(p.sentence_id);
    const auto ya = aspect.Predict(aspect.Tokenize(s, p));
    const auto ys = sentiment.Predict(sentiment.Tokenize(s, p));
    rows[i] = {{"id", p.id},
               {"sentence_id", p.sentence_id},
               {"target", s.target_id},
               {"surface", p.surface},
               {"aspect", NameOrNull(run.schema(SchemaKind::kAspect),
                                     ClassifyDistribution(ya, theta2))},
               {"sentiment", NameOrNull(run.schema(SchemaKind::kSentiment),
                                        ClassifyDistribution(ys, theta2))},
               {"aspect_distribution", ya},
               {"sentiment_distribution", ys}};
  });
  WriteJsonLines(run.files().labels(), rows);
}

std::optional<std::string> OptionalName(const json &j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

void ClusterStage(Run &run) {
  // Phrases are clustered in the fine-tuned aspect encoder's space.
  const ReferenceEncoder encoder =
      ReferenceEncoder::LoadFile(run.files().finetuned(SchemaKind::kAspect));
  std::unordered_map<std::string, const Phrase *> by_id;
  for (const Phrase &p : run.phrases()) by_id.emplace(p.id, &p);
  std::map<std::string, std::vector<LabeledPhrase>> by_target;
  for (const json &row : ReadJsonLines(run.files().labels())) {
    LabeledPhrase lp;
    lp.phrase_id = row.at("id").get<std::string>();
    lp.aspect = OptionalName(row.at("aspect"));
    lp.sentiment = OptionalName(row.at("sentiment"));
    auto &bucket = by_target[row.at("target").get<std::string>()];
    if (!lp.aspect || !lp.sentiment) continue;
    auto it = by_id.find(lp.phrase_id);
    if (it == by_id.end()) throw ValidationError("unknown phrase id " + lp.phrase_id);
    const Phrase &phrase = *it->second;
    const Eigen::VectorXd v =
        EmbedPhrase(encoder, encoder.Tokenize(run.sentence(phrase.sentence_id), phrase));
    lp.embedding.assign(v.data(), v.data() + v.size());
    bucket.push_back(std::move(lp));
  }
  std::vector<json> rows;
  for (const auto &[target, phrases] : by_target) {
    const OpinionSummary summary = BuildSummary(target, phrases, run.config().cluster);
    json groups = json::object();
    for (const auto &[key, clusters] : summary.groups) {
      json list = json::array();
      for (const OpinionCluster &c : clusters) list.push_back(c.members);
      groups[key] = list;
    }
    rows.push_back({{"target", target}, {"groups", groups}});
  }
  WriteJsonLines(run.files().clusters(), rows);
}

void SummarizeStage(Run &run) {
  std::map<std::string, std::string> surfaces;
  for (const Phrase &p : run.phrases()) surfaces.emplace(p.id, p.surface);
  json targets = json::array();
  for (const json &row : ReadJsonLines(run.files().clusters())) {
    OpinionSummary summary;
    summary.target_id = row.at("target").get<std::string>();
    for (const auto &[key, list] : row.at("groups").items()) {
      const auto bar = key.find('|');
      for (const json &members : list) {
        summary.groups[key].push_back({key.substr(0, bar), key.substr(bar + 1),
                                       members.get<std::vector<std::string>>()});
      }
    }
    targets.push_back(SummaryToJson(summary, surfaces));
  }
  WriteFileAtomic(run.files().summary(), [&](std::ostream &out) {
    out << json{{"targets", targets}}.dump(2) << "\n";
  });
}

std::vector<std::string> PerKind(const Artifacts &a,
                                 std::string (Artifacts::*path)(SchemaKind) const) {
  return {(a.*path)(SchemaKind::kAspect), (a.*path)(SchemaKind::kSentiment)};
}

std::vector<Stage> BuildStages() {
  return {
      {"extract",
       [](Run &r) {
         return json{{"corpus", FileDigest(r.config().paths.corpus)},
                     {"trees", FileDigest(r.config().paths.trees)}};
       },
       [](const Artifacts &a) { return std::vector<std::string>{a.corpus(), a.phrases()}; },
       ExtractStage},
      {"train-embed",
       [](Run &r) {
         return json{{"embed", EmbedToJson(r.config().embed)},
                     {"seed", r.config().seed},
                     {"threads", r.config().threads},
                     {"aspect", HexDigest(r.schema(SchemaKind::kAspect).Hash())},
                     {"sentiment", HexDigest(r.schema(SchemaKind::kSentiment).Hash())}};
       },
       [](const Artifacts &a) { return PerKind(a, &Artifacts::space); }, EmbedStage},
      {"pseudo-label",
       [](Run &r) {
         return json{{"top_k", r.config().distill.top_k}, {"alpha", r.config().distill.alpha}};
       },
       [](const Artifacts &a) { return PerKind(a, &Artifacts::pseudo); }, PseudoLabelStage},
      {"train-classifier",
       [](Run &r) {
         return json{{"train", TrainToJson(r.config().train)},
                     {"encoder", {r.config().encoder.dim, r.config().encoder.min_count}},
                     {"seed", r.config().seed}};
       },
       [](const Artifacts &a) { return PerKind(a, &Artifacts::encoder); },
       TrainClassifierStage},
      {"phrase-labels", [](Run &r) { return DistillToJson(r.config().distill); },
       [](const Artifacts &a) { return PerKind(a, &Artifacts::phrase_labels); },
       PhraseLabelStage},
      {"finetune-phrases",
       [](Run &r) {
         return json{{"train", TrainToJson(r.config().train)}, {"seed", r.config().seed}};
       },
       [](const Artifacts &a) { return PerKind(a, &Artifacts::finetuned); }, FinetuneStage},
      {"classify", [](Run &r) { return json{{"theta2", r.config().distill.theta2}}; },
       [](const Artifacts &a) { return std::vector<std::string>{a.labels()}; }, ClassifyStage},
      {"cluster",
       [](Run &r) {
         return json{{"threshold", r.config().cluster.threshold},
                     {"linkage", LinkageName(r.config().cluster.linkage)}};
       },
       [](const Artifacts &a) { return std::vector<std::string>{a.clusters()}; }, ClusterStage},
      {"summarize", [](Run &) { return json::object(); },
       [](const Artifacts &a) { return std::vector<std::string>{a.summary()}; },
       SummarizeStage},
  };
}

std::string ReadKey(const std::string &path) {
  std::ifstream in(path);
  std::string key;
  if (in) std::getline(in, key);
  return key;
}

}  // namespace

std::vector<StageResult> RunPipeline(const PipelineConfig &input, const RunOptions &options) {
  PipelineConfig config = input;
  config.Propagate();
  config.Validate();
  for (const std::string &name : options.only) {
    const auto &names = StageNames();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ValidationError("unknown stage '" + name + "'");
    }
  }

  Run run(config);
  // Schemas are inputs of several stages; reject bad ones before writing.
  for (SchemaKind kind : kKinds) run.schema(kind).Validate();
  fs::create_directories(config.paths.workdir);

  std::vector<StageResult> results;
  uint64_t chain = HashBytes("opsum-pipeline/1");
  bool upstream_ran = false;
  std::string last_good;
  const std::vector<Stage> stages = BuildStages();
  size_t last_selected = stages.size() - 1;
  if (!options.only.empty()) {
    while (std::find(options.only.begin(), options.only.end(), stages[last_selected].name) ==
           options.only.end()) {
      --last_selected;
    }
  }
  for (size_t index = 0; index <= last_selected; ++index) {
    const Stage &stage = stages[index];
    const bool selected =
        options.only.empty() ||
        std::find(options.only.begin(), options.only.end(), stage.name) != options.only.end();
    StageResult result{stage.name, false, stage.outputs(run.files())};
    try {
      chain = HashBytes(stage.name + stage.params(run).dump(), chain);
      const std::string key = HexDigest(chain);
      const std::string key_path = run.files().Path(stage.name + ".key");
      bool stale = upstream_ran || ReadKey(key_path) != key;
      for (const std::string &out : result.artifacts) stale = stale || !fs::exists(out);
      if (selected && (stale || options.force)) {
        stage.execute(run);
        WriteFileAtomic(key_path, [&](std::ostream &out) { out << key << "\n"; });
        result.ran = true;
        upstream_ran = true;
      } else if (!selected && stale) {
        throw ValidationError("stage " + stage.name +
                              " is missing outputs or out of date; run it first");
      }
    } catch (const ValidationError &e) {
      throw StageError(stage.name, last_good, e.what());
    } catch (const ParseError &e) {
      throw StageError(stage.name, last_good, e.what());
    } catch (const std::exception &e) {
      throw StageError(stage.name, last_good, e.what());
    }
    last_good = result.artifacts.back();
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace opsum
