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

#ifndef OPSUM_PIPELINE_H_
#define OPSUM_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "opsum/classifier.h"
#include "opsum/cluster.h"
#include "opsum/distill.h"
#include "opsum/schema.h"
#include "opsum/sphere.h"

namespace opsum {

struct PipelinePaths {
  std::string corpus;  // CoNLL-U
  std::string trees;   // optional, one bracketed tree per sentence
  std::string aspect_schema;
  std::string sentiment_schema;
  std::string workdir;
};

struct PipelineConfig {
  PipelinePaths paths;
  EmbedConfig embed;
  DistillConfig distill;
  TrainConfig train;
  EncoderConfig encoder;
  ClusterConfig cluster;
  uint64_t seed = 1;
  int threads = 0;  // 0: deterministic single-threaded

  // Checks nested configs and that every input path exists.
  void Validate() const;
  // Copies the global seed and thread count into the nested configs.
  void Propagate();
};

nlohmann::json ConfigToJson(const PipelineConfig &config);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig ConfigFromJson(const nlohmann::json &j);
PipelineConfig LoadConfigFile(const std::string &path);

// Seed precedence: explicit flag, then OPSUM_SEED, then the config file.
uint64_t ResolveSeed(std::optional<uint64_t> flag, uint64_t from_config);

inline constexpr char kSeedEnv[] = "OPSUM_SEED";

// Raised when a stage fails after validation. Carries the failing stage and
// the artifact of the last stage that completed.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string last_good, const std::string &what)
      : std::runtime_error("stage " + stage + " failed: " + what +
                           (last_good.empty() ? "" : " (last good artifact: " + last_good + ")")),
        stage_(std::move(stage)), last_good_(std::move(last_good)) {}
  const std::string &stage() const { return stage_; }
  const std::string &last_good() const { return last_good_; }

 private:
  std::string stage_;
  std::string last_good_;
};

// Stage names in execution order.
const std::vector<std::string> &StageNames();

struct StageResult {
  std::string name;
  bool ran = false;
  std::vector<std::string> artifacts;
};

struct RunOptions {
  // Run only these stages. Earlier stages must be up to date; later ones are
  // not touched.
  std::vector<std::string> only;
  // Re-run every selected stage regardless of cached keys.
  bool force = false;
};

// Runs the pipeline. A stage re-runs when an output is missing, its key file
// does not match the current inputs and parameters, or an upstream stage ran
// in this invocation.
std::vector<StageResult> RunPipeline(const PipelineConfig &config,
                                     const RunOptions &options = {});

// Artifact locations inside the work directory.
struct Artifacts {
  explicit Artifacts(std::string workdir) : dir(std::move(workdir)) {}
  std::string dir;
  std::string Path(const std::string &name) const { return dir + "/" + name; }
  std::string corpus() const { return Path("corpus.jsonl"); }
  std::string phrases() const { return Path("phrases.jsonl"); }
  std::string space(SchemaKind k) const { return Path(Prefix(k) + ".space"); }
  std::string pseudo(SchemaKind k) const { return Path(Prefix(k) + ".pseudo.jsonl"); }
  std::string encoder(SchemaKind k) const { return Path(Prefix(k) + ".encoder"); }
  std::string phrase_labels(SchemaKind k) const {
    return Path(Prefix(k) + ".phrase_labels.jsonl");
  }
  std::string finetuned(SchemaKind k) const { return Path(Prefix(k) + ".finetuned.encoder"); }
  std::string labels() const { return Path("labels.jsonl"); }
  std::string clusters() const { return Path("clusters.jsonl"); }
  std::string summary() const { return Path("summary.json"); }
  std::string log() const { return Path("train_log.jsonl"); }

 private:
  static std::string Prefix(SchemaKind k) { return std::string(KindName(k)); }
};

}  // namespace opsum

#endif  // OPSUM_PIPELINE_H_
