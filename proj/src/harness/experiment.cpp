#include "sgmm/harness/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <set>

#include "sgmm/error.hpp"
#include "sgmm/harness/dataset.hpp"
#include "sgmm/numkit/checkpoint.hpp"
#include "sgmm/numkit/params.hpp"

namespace sgmm::harness {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

namespace {

void check_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else {
      if (!it->is_string()) throw ConfigError("");
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string(where) + ": key \"" + key + "\" has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void read_model(const Json& j, ModelSpec& m) {
  check_keys(j, "model",
             {"d_model", "n_heads", "n_layers", "d_ff", "max_len", "gsgm_hidden", "gsgm_output", "head_hidden",
              "gcn_bias", "vocab_max_size"});
  read(j, "d_model", m.d_model, "model");
  read(j, "n_heads", m.n_heads, "model");
  read(j, "n_layers", m.n_layers, "model");
  read(j, "d_ff", m.d_ff, "model");
  read(j, "max_len", m.max_len, "model");
  read(j, "gsgm_hidden", m.gsgm_hidden, "model");
  read(j, "gsgm_output", m.gsgm_output, "model");
  read(j, "head_hidden", m.head_hidden, "model");
  read(j, "gcn_bias", m.gcn_bias, "model");
  read(j, "vocab_max_size", m.vocab_max_size, "model");
}

void read_node2vec(const Json& j, embeddings::Node2VecConfig& c) {
  check_keys(j, "node2vec",
             {"p", "q", "walk_length", "walks_per_node", "window", "embedding_dim", "negative_samples", "epochs",
              "learning_rate", "seed"});
  read(j, "p", c.p, "node2vec");
  read(j, "q", c.q, "node2vec");
  read(j, "walk_length", c.walk_length, "node2vec");
  read(j, "walks_per_node", c.walks_per_node, "node2vec");
  read(j, "window", c.window, "node2vec");
  read(j, "embedding_dim", c.embedding_dim, "node2vec");
  read(j, "negative_samples", c.negative_samples, "node2vec");
  read(j, "epochs", c.epochs, "node2vec");
  read(j, "learning_rate", c.learning_rate, "node2vec");
  read(j, "seed", c.seed, "node2vec");
}

void read_train(const Json& j, model::TrainConfig& t) {
  check_keys(j, "train",
             {"preset", "lr", "weight_decay", "dropout", "beta1", "beta2", "epsilon", "batch_size", "epochs"});
  std::string preset = "paper";
  read(j, "preset", preset, "train");
  const auto seed = t.seed;
  if (preset == "desk") {
    t = model::TrainConfig::desk_preset();
  } else if (preset != "paper") {
    throw ConfigError("train: preset must be \"paper\" or \"desk\"");
  }
  t.seed = seed;
  read(j, "lr", t.lr, "train");
  read(j, "weight_decay", t.weight_decay, "train");
  read(j, "dropout", t.dropout, "train");
  read(j, "beta1", t.beta1, "train");
  read(j, "beta2", t.beta2, "train");
  read(j, "epsilon", t.epsilon, "train");
  read(j, "batch_size", t.batch_size, "train");
  read(j, "epochs", t.epochs, "train");
}

OrderedJson model_json(const ModelSpec& m) {
  OrderedJson j;
  j["d_model"] = m.d_model;
  j["n_heads"] = m.n_heads;
  j["n_layers"] = m.n_layers;
  j["d_ff"] = m.d_ff;
  j["max_len"] = m.max_len;
  j["gsgm_hidden"] = m.gsgm_hidden;
  j["gsgm_output"] = m.gsgm_output;
  j["head_hidden"] = m.head_hidden;
  j["gcn_bias"] = m.gcn_bias;
  j["vocab_max_size"] = m.vocab_max_size;
  return j;
}

OrderedJson node2vec_json(const embeddings::Node2VecConfig& c) {
  OrderedJson j;
  j["p"] = c.p;
  j["q"] = c.q;
  j["walk_length"] = c.walk_length;
  j["walks_per_node"] = c.walks_per_node;
  j["window"] = c.window;
  j["embedding_dim"] = c.embedding_dim;
  j["negative_samples"] = c.negative_samples;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  return j;
}

OrderedJson train_json(const model::TrainConfig& t) {
  OrderedJson j;
  j["lr"] = t.lr;
  j["weight_decay"] = t.weight_decay;
  j["dropout"] = t.dropout;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["epsilon"] = t.epsilon;
  j["batch_size"] = t.batch_size;
  j["epochs"] = t.epochs;
  j["seed"] = t.seed;
  j["ablation"] = t.ablation.name();
  j["fusion"] = model::to_string(t.fusion);
  j["cmsg_threshold"] = t.cmsg_threshold ? Json(*t.cmsg_threshold) : Json(nullptr);
  j["feature_mode"] = embeddings::to_string(t.feature_mode);
  return j;
}

std::string threshold_name(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%g", t);
  return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("experiment config is not valid JSON: " + std::string(e.what()));
  }
  check_keys(j, "config",
             {"name", "dataset", "output_dir", "word_vectors", "seed", "fusion", "cmsg_threshold", "feature_mode",
              "ablation", "train", "model", "node2vec", "sweep"});
  ExperimentConfig c;
  c.source = OrderedJson::parse(text);
  read(j, "name", c.name, "config");
  std::string dataset, output_dir;
  read(j, "dataset", dataset, "config");
  read(j, "output_dir", output_dir, "config");
  if (dataset.empty()) throw ConfigError("config: \"dataset\" is required");
  if (output_dir.empty()) throw ConfigError("config: \"output_dir\" is required");
  c.dataset = resolve(base_dir, dataset);
  c.output_dir = resolve(base_dir, output_dir);
  if (j.contains("word_vectors")) {
    std::string wv;
    read(j, "word_vectors", wv, "config");
    c.word_vectors = resolve(base_dir, wv);
  }

  read(j, "seed", c.train.seed, "config");
  if (j.contains("train")) read_train(j["train"], c.train);
  if (j.contains("model")) read_model(j["model"], c.model);
  if (j.contains("node2vec")) read_node2vec(j["node2vec"], c.node2vec);

  std::string fusion = "base", feature_mode = "glove", ablation = "full";
  read(j, "fusion", fusion, "config");
  read(j, "feature_mode", feature_mode, "config");
  read(j, "ablation", ablation, "config");
  c.train.fusion = model::parse_fusion(fusion);
  c.train.feature_mode = embeddings::parse_feature_mode(feature_mode);
  c.train.ablation = model::parse_ablation(ablation);
  if (j.contains("cmsg_threshold")) {
    double t = 0.0;
    read(j, "cmsg_threshold", t, "config");
    c.train.cmsg_threshold = t;
  }

  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    check_keys(s, "sweep", {"ablations", "cmsg_thresholds"});
    if (s.contains("ablations") == s.contains("cmsg_thresholds")) {
      throw ConfigError("sweep: give exactly one of \"ablations\" or \"cmsg_thresholds\"");
    }
    if (s.contains("ablations")) {
      if (!s["ablations"].is_array() || s["ablations"].empty()) throw ConfigError("sweep.ablations must be a non-empty array");
      for (const auto& a : s["ablations"]) {
        if (!a.is_string()) throw ConfigError("sweep.ablations entries must be strings");
        c.sweep_ablations.push_back(model::parse_ablation(a.get<std::string>()));
      }
    } else {
      if (!s["cmsg_thresholds"].is_array() || s["cmsg_thresholds"].empty()) {
        throw ConfigError("sweep.cmsg_thresholds must be a non-empty array");
      }
      for (const auto& t : s["cmsg_thresholds"]) {
        if (!t.is_number()) throw ConfigError("sweep.cmsg_thresholds entries must be numbers");
        c.sweep_thresholds.push_back(t.get<double>());
      }
      c.train.fusion = model::FusionVariant::kCmsg3;
      c.train.cmsg_threshold = c.sweep_thresholds.front();
    }
  }
  for (const auto& run : expand_runs(c)) run.train.validate();
  c.node2vec.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  auto c = parse_experiment_config(text, fs::absolute(path).parent_path());
  if (const char* env = std::getenv("SGMM_SEED"); env && *env) {
    char* end = nullptr;
    const auto seed = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError("SGMM_SEED must be an unsigned integer, got \"" + std::string(env) + "\"");
    c.train.seed = seed;
  }
  return c;
}

std::vector<RunSpec> expand_runs(const ExperimentConfig& config) {
  std::vector<RunSpec> runs;
  if (!config.sweep_ablations.empty()) {
    for (const auto& a : config.sweep_ablations) {
      RunSpec r{a.name(), config.train};
      r.train.ablation = a;
      runs.push_back(std::move(r));
    }
  } else if (!config.sweep_thresholds.empty()) {
    for (double t : config.sweep_thresholds) {
      RunSpec r{threshold_name(t), config.train};
      r.train.cmsg_threshold = t;
      runs.push_back(std::move(r));
    }
  } else {
    runs.push_back({config.train.ablation.name(), config.train});
  }
  std::set<std::string> names;
  for (const auto& r : runs) {
    if (!names.insert(r.name).second) throw ConfigError("sweep: duplicate run \"" + r.name + "\"");
  }
  return runs;
}

std::string run_context_to_json(const RunContext& ctx) {
  OrderedJson j;
  j["dataset"] = ctx.dataset.string();
  j["word_vectors"] = ctx.word_vectors ? Json(ctx.word_vectors->string()) : Json(nullptr);
  j["train"] = train_json(ctx.train);
  j["model"] = model_json(ctx.model);
  j["node2vec"] = node2vec_json(ctx.node2vec);
  return j.dump(2) + "\n";
}

RunContext run_context_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("run config is not valid JSON: " + std::string(e.what()));
  }
  check_keys(j, "run config", {"dataset", "word_vectors", "train", "model", "node2vec"});
  RunContext ctx;
  std::string dataset;
  read(j, "dataset", dataset, "run config");
  ctx.dataset = dataset;
  if (j.contains("word_vectors") && !j["word_vectors"].is_null()) {
    std::string wv;
    read(j, "word_vectors", wv, "run config");
    ctx.word_vectors = wv;
  }
  const auto& t = j.at("train");
  check_keys(t, "run config train",
             {"lr", "weight_decay", "dropout", "beta1", "beta2", "epsilon", "batch_size", "epochs", "seed", "ablation",
              "fusion", "cmsg_threshold", "feature_mode"});
  read(t, "lr", ctx.train.lr, "train");
  read(t, "weight_decay", ctx.train.weight_decay, "train");
  read(t, "dropout", ctx.train.dropout, "train");
  read(t, "beta1", ctx.train.beta1, "train");
  read(t, "beta2", ctx.train.beta2, "train");
  read(t, "epsilon", ctx.train.epsilon, "train");
  read(t, "batch_size", ctx.train.batch_size, "train");
  read(t, "epochs", ctx.train.epochs, "train");
  read(t, "seed", ctx.train.seed, "train");
  std::string ablation = "full", fusion = "base", mode = "glove";
  read(t, "ablation", ablation, "train");
  read(t, "fusion", fusion, "train");
  read(t, "feature_mode", mode, "train");
  ctx.train.ablation = model::parse_ablation(ablation);
  ctx.train.fusion = model::parse_fusion(fusion);
  ctx.train.feature_mode = embeddings::parse_feature_mode(mode);
  if (t.contains("cmsg_threshold") && !t["cmsg_threshold"].is_null()) {
    double v = 0.0;
    read(t, "cmsg_threshold", v, "train");
    ctx.train.cmsg_threshold = v;
  }
  read_model(j.at("model"), ctx.model);
  read_node2vec(j.at("node2vec"), ctx.node2vec);
  return ctx;
}

embeddings::WordVectorTable load_words(const std::optional<fs::path>& path) {
  if (!path) return embeddings::WordVectorTable(kDefaultWordDim);
  return embeddings::load_word_vectors_file(*path);
}

model::PrepareOptions prepare_options(const RunContext& ctx, const tem::Vocabulary& vocab,
                                      const embeddings::WordVectorTable& words) {
  model::PrepareOptions o;
  o.vocab = &vocab;
  o.words = &words;
  o.feature_mode = ctx.train.feature_mode;
  o.node2vec = ctx.node2vec;
  o.fusion = ctx.train.fusion;
  o.cmsg_threshold = ctx.train.cmsg_threshold;
  o.max_len = ctx.model.max_len;
  return o;
}

model::ModelConfig model_config(const RunContext& ctx, std::size_t vocab_size, std::size_t graph_input_dim) {
  model::ModelConfig m;
  m.tem.vocab_size = vocab_size;
  m.tem.d_model = ctx.model.d_model;
  m.tem.n_heads = ctx.model.n_heads;
  m.tem.n_layers = ctx.model.n_layers;
  m.tem.d_ff = ctx.model.d_ff;
  m.tem.max_len = ctx.model.max_len;
  m.tem.dropout = ctx.train.dropout;
  m.graph_input_dim = graph_input_dim;
  m.gsgm_hidden = ctx.model.gsgm_hidden;
  m.gsgm_output = ctx.model.gsgm_output;
  m.head_hidden = ctx.model.head_hidden;
  m.gcn_bias = ctx.model.gcn_bias;
  m.fusion = ctx.train.fusion;
  m.head_dropout = ctx.train.dropout;
  return m;
}

std::vector<model::PreparedExample> prepare_split(const std::vector<model::Example>& examples, model::Split split,
                                                  const model::PrepareOptions& options,
                                                  const model::Ablation& ablation) {
  std::vector<model::PreparedExample> out;
  for (const auto& ex : examples) {
    if (ex.split != split) continue;
    out.push_back(model::apply_ablation(model::prepare_example(ex, options), ablation));
  }
  return out;
}

namespace {

OrderedJson class_json(const model::ClassMetrics& m) {
  OrderedJson j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["precision_undefined"] = m.precision_undefined;
  j["recall_undefined"] = m.recall_undefined;
  j["f1_undefined"] = m.f1_undefined;
  return j;
}

model::ClassMetrics class_from_json(const Json& j) {
  model::ClassMetrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.precision_undefined = j.at("precision_undefined").get<bool>();
  m.recall_undefined = j.at("recall_undefined").get<bool>();
  m.f1_undefined = j.at("f1_undefined").get<bool>();
  return m;
}

}  // namespace

std::string metrics_to_json(const model::MetricsReport& r, const OrderedJson& config) {
  OrderedJson j;
  j["count"] = r.count;
  j["accuracy"] = r.accuracy;
  j["fake"] = class_json(r.fake);
  j["real"] = class_json(r.real);
  j["confusion"] = {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}};
  j["config"] = config;
  return j.dump(2) + "\n";
}

model::MetricsReport metrics_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    model::MetricsReport r;
    r.count = j.at("count").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.fake = class_from_json(j.at("fake"));
    r.real = class_from_json(j.at("real"));
    const auto& c = j.at("confusion");
    r.tp = c.at("tp").get<std::size_t>();
    r.fp = c.at("fp").get<std::size_t>();
    r.fn = c.at("fn").get<std::size_t>();
    r.tn = c.at("tn").get<std::size_t>();
    return r;
  } catch (const Json::exception& e) {
    throw FieldError("metrics report: " + std::string(e.what()));
  }
}

std::string epoch_log_line(const model::EpochLog& log) {
  OrderedJson j;
  j["epoch"] = log.epoch;
  j["train_loss"] = log.train_loss;
  j["train_acc"] = log.train_acc;
  j["test_acc"] = log.test_acc;
  return j.dump() + "\n";
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  const auto runs = expand_runs(config);
  const auto examples = load_dataset(config.dataset);
  std::vector<std::string> train_texts;
  for (const auto& ex : examples) {
    if (ex.split == model::Split::kTrain) train_texts.push_back(ex.text);
  }
  if (train_texts.empty()) throw ConfigError("dataset has no training examples");
  const auto vocab = tem::Vocabulary::build(train_texts, config.model.vocab_max_size);
  const auto words = load_words(config.word_vectors);

  std::vector<RunResult> results;
  OrderedJson summary = OrderedJson::array();
  for (const auto& run : runs) {
    RunContext ctx{config.dataset, config.word_vectors, run.train, config.model, config.node2vec};
    const auto options = prepare_options(ctx, vocab, words);
    const auto train_set = prepare_split(examples, model::Split::kTrain, options, run.train.ablation);
    const auto test_set = prepare_split(examples, model::Split::kTest, options, run.train.ablation);
    if (test_set.empty()) throw ConfigError("dataset has no test examples");

    auto params = model::ModelParams::init(model_config(ctx, vocab.size(), model::node_feature_dim(options)),
                                           run.train.seed);
    RunResult result;
    result.name = run.name;
    result.dir = config.output_dir / run.name;
    std::string log_text;
    result.log = model::train(params, train_set, test_set, run.train, [&](const model::EpochLog& log) {
      log_text += epoch_log_line(log);
      if (progress) progress(run.name, log);
    });
    result.metrics = model::evaluate(test_set, params);

    OrderedJson provenance;
    provenance["experiment"] = config.source;
    provenance["run"] = run.name;
    provenance["resolved"] = train_json(run.train);
    write_file(result.dir / "metrics.json", metrics_to_json(result.metrics, provenance));
    write_file(result.dir / "train_log.jsonl", log_text);
    write_file(result.dir / "run_config.json", run_context_to_json(ctx));
    vocab.save(result.dir / "vocab.txt");
    numkit::save_checkpoint(result.dir / "model.ckpt", numkit::snapshot(params.parameters()));

    summary.push_back({{"run", run.name}, {"accuracy", result.metrics.accuracy}});
    results.push_back(std::move(result));
  }
  write_file(config.output_dir / "summary.json", summary.dump(2) + "\n");
  return results;
}

std::vector<RunResult> run_experiment(const fs::path& config_path, const ProgressFn& progress) {
  return run_experiment(load_experiment_config(config_path), progress);
}

LoadedRun load_run(const fs::path& dir, const fs::path& checkpoint) {
  LoadedRun run;
  run.context = run_context_from_json(read_file(dir / "run_config.json"));
  run.vocab = tem::Vocabulary::load(dir / "vocab.txt");
  run.words = load_words(run.context.word_vectors);
  const auto options = prepare_options(run.context, run.vocab, run.words);
  run.params = model::ModelParams::init(
      model_config(run.context, run.vocab.size(), model::node_feature_dim(options)), run.context.train.seed);
  auto list = run.params.parameters();
  numkit::restore(list, numkit::load_checkpoint(checkpoint));
  return run;
}

}  // namespace sgmm::harness
