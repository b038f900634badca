#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sgmm/embeddings/node2vec.hpp"
#include "sgmm/embeddings/word_vectors.hpp"
#include "sgmm/model/model.hpp"
#include "sgmm/tem/text.hpp"

namespace sgmm::harness {

// Architecture sizes. Defaults are desk scale.
struct ModelSpec {
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 64;
  std::size_t max_len = 64;
  std::size_t gsgm_hidden = 32;
  std::size_t gsgm_output = 32;
  std::size_t head_hidden = 64;
  bool gcn_bias = true;
  std::size_t vocab_max_size = 2000;
};

inline constexpr std::size_t kDefaultWordDim = 50;

// One experiment file. Relative paths are resolved against the directory
// holding the config.
struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path dataset;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> word_vectors;
  model::TrainConfig train;  // carries seed, fusion, ablation, feature mode
  ModelSpec model;
  embeddings::Node2VecConfig node2vec;
  std::vector<model::Ablation> sweep_ablations;
  std::vector<double> sweep_thresholds;
  nlohmann::ordered_json source;  // the file as written
};

// ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_experiment_config(std::string_view json, const std::filesystem::path& base_dir);

// Reads the file and applies the SGMM_SEED override.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunSpec {
  std::string name;  // subdirectory under output_dir
  model::TrainConfig train;
};

// One run without a sweep, otherwise one per sweep entry.
std::vector<RunSpec> expand_runs(const ExperimentConfig& config);

// Everything needed to rebuild a trained model.
struct RunContext {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> word_vectors;
  model::TrainConfig train;
  ModelSpec model;
  embeddings::Node2VecConfig node2vec;
};

std::string run_context_to_json(const RunContext& ctx);
RunContext run_context_from_json(std::string_view json);

embeddings::WordVectorTable load_words(const std::optional<std::filesystem::path>& path);
model::PrepareOptions prepare_options(const RunContext& ctx, const tem::Vocabulary& vocab,
                                      const embeddings::WordVectorTable& words);
model::ModelConfig model_config(const RunContext& ctx, std::size_t vocab_size, std::size_t graph_input_dim);

// Prepared and ablated examples of one split.
std::vector<model::PreparedExample> prepare_split(const std::vector<model::Example>& examples, model::Split split,
                                                  const model::PrepareOptions& options,
                                                  const model::Ablation& ablation);

std::string metrics_to_json(const model::MetricsReport& report, const nlohmann::ordered_json& config);
model::MetricsReport metrics_from_json(std::string_view json);
std::string epoch_log_line(const model::EpochLog& log);

struct RunResult {
  std::string name;
  std::filesystem::path dir;
  model::MetricsReport metrics;
  std::vector<model::EpochLog> log;
};

using ProgressFn = std::function<void(const std::string& run, const model::EpochLog& log)>;

// Trains and evaluates every run, writing metrics.json, model.ckpt,
// train_log.jsonl, vocab.txt and run_config.json per run plus summary.json.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
std::vector<RunResult> run_experiment(const std::filesystem::path& config_path, const ProgressFn& progress = {});

// A trained run loaded back from its directory.
struct LoadedRun {
  RunContext context;
  tem::Vocabulary vocab;
  embeddings::WordVectorTable words;
  model::ModelParams params;
};

// `dir` holds run_config.json, vocab.txt and the checkpoint.
LoadedRun load_run(const std::filesystem::path& dir, const std::filesystem::path& checkpoint);

}  // namespace sgmm::harness
