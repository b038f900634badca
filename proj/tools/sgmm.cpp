// sgmm: command-line front end for dataset generation, training, evaluation
// and attribution.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sgmm/embeddings/node2vec.hpp"
#include "sgmm/embeddings/word_vectors.hpp"
#include "sgmm/error.hpp"
#include "sgmm/explain/attribution.hpp"
#include "sgmm/explain/report.hpp"
#include "sgmm/harness/dataset.hpp"
#include "sgmm/harness/experiment.hpp"
#include "sgmm/harness/gradient_suite.hpp"
#include "sgmm/harness/synth.hpp"
#include "sgmm/numkit/checkpoint.hpp"
#include "sgmm/scenegraph/cmsg.hpp"

namespace fs = std::filesystem;
using namespace sgmm;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

int gen_synth_cmd(const harness::SynthSpec& spec, const fs::path& out, bool probe) {
  const auto data = harness::gen_synth(spec, out);
  std::size_t fakes = 0;
  for (const auto& r : data.records) fakes += r.label;
  std::printf("wrote %zu records (%zu fake, %zu real) to %s\n", data.records.size(), fakes,
              data.records.size() - fakes, out.string().c_str());
  if (probe) std::printf("bag-of-words probe accuracy: %.4f\n", harness::bow_probe_accuracy(data.examples));
  return 0;
}

int train_cmd(const fs::path& config_path, bool quiet) {
  const auto config = harness::load_experiment_config(config_path);
  const auto results = harness::run_experiment(config, [&](const std::string& run, const model::EpochLog& log) {
    if (quiet) return;
    std::printf("[%s] epoch %zu  loss %.4f  train_acc %.4f  test_acc %.4f\n", run.c_str(), log.epoch, log.train_loss,
                log.train_acc, log.test_acc);
    std::fflush(stdout);
  });
  for (const auto& r : results) {
    std::printf("%-24s accuracy %.4f  fake_f1 %.4f  real_f1 %.4f  -> %s\n", r.name.c_str(), r.metrics.accuracy,
                r.metrics.fake.f1, r.metrics.real.f1, r.dir.string().c_str());
  }
  return 0;
}

fs::path run_dir_of(const fs::path& checkpoint, const std::string& run_dir) {
  return run_dir.empty() ? checkpoint.parent_path() : fs::path(run_dir);
}

int eval_cmd(const fs::path& checkpoint, const std::string& run_dir, const std::string& split) {
  const auto dir = run_dir_of(checkpoint, run_dir);
  const auto run = harness::load_run(dir, checkpoint);
  const auto examples = harness::load_dataset(run.context.dataset);
  const auto options = harness::prepare_options(run.context, run.vocab, run.words);
  const auto set = harness::prepare_split(examples, model::parse_split(split), options, run.context.train.ablation);
  const auto report = model::evaluate(set, run.params);
  nlohmann::ordered_json cfg;
  cfg["checkpoint"] = checkpoint.string();
  cfg["split"] = split;
  std::cout << harness::metrics_to_json(report, cfg);
  return 0;
}

int explain_cmd(const fs::path& checkpoint, const std::string& run_dir, const std::string& record,
                const std::string& method, std::size_t samples, std::uint64_t seed, bool text, const std::string& out) {
  const auto dir = run_dir_of(checkpoint, run_dir);
  const auto run = harness::load_run(dir, checkpoint);
  const auto examples = harness::load_dataset(run.context.dataset);
  const auto it = std::find_if(examples.begin(), examples.end(), [&](const auto& e) { return e.id == record; });
  if (it == examples.end()) throw ConfigError("record \"" + record + "\" is not in the dataset");
  const auto options = harness::prepare_options(run.context, run.vocab, run.words);
  const auto input = explain::make_explain_input(*it, options);
  const auto report = explain::attribute(input, run.params, explain::parse_method(method), samples, seed);
  for (const auto& w : report.shapley.warnings) std::cerr << "warning: " << w << "\n";
  const std::string rendered = text ? explain::render_text(report) : explain::render_json(report);
  if (out.empty()) {
    std::cout << rendered;
  } else {
    harness::write_file(out, rendered);
  }
  return 0;
}

int cmsg_cmd(int type, const fs::path& tsg_path, const fs::path& vsg_path, const fs::path& out,
             std::optional<double> threshold, const std::string& words_path) {
  const auto tsg = scenegraph::load_scene_graph(tsg_path, scenegraph::Modality::kText);
  const auto vsg = scenegraph::load_scene_graph(vsg_path, scenegraph::Modality::kVisual);
  scenegraph::CmsgResult result;
  switch (type) {
    case 1:
      result = scenegraph::cmsg_type1(tsg, vsg);
      break;
    case 2:
      result = scenegraph::cmsg_type2(tsg, vsg);
      break;
    case 3: {
      if (!threshold) throw ConfigError("--threshold is required for type 3");
      const auto words = words_path.empty() ? embeddings::WordVectorTable(harness::kDefaultWordDim)
                                            : embeddings::load_word_vectors_file(words_path);
      result = scenegraph::cmsg_type3(tsg, vsg, embeddings::make_featurizer(words), *threshold);
      break;
    }
    default:
      throw ConfigError("--type must be 1, 2 or 3");
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  scenegraph::save_scene_graph(out, result.graph);
  std::printf("fused graph: %zu nodes, %zu edges, %zu merges -> %s\n", result.graph.size(), result.graph.edges.size(),
              result.merges, out.string().c_str());
  return 0;
}

int node2vec_cmd(const fs::path& graph_path, const embeddings::Node2VecConfig& config, const std::string& out) {
  const auto g = scenegraph::load_scene_graph(graph_path);
  const auto emb = embeddings::node2vec_embed(scenegraph::to_plain_graph(g), config);
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < emb.size(); ++i) {
    j.push_back({{"id", i}, {"label", g.nodes[i].label}, {"vector", emb[i]}});
  }
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    harness::write_file(out, text);
  }
  return 0;
}

int gradcheck_cmd(double eps, double tolerance) {
  const auto result = harness::run_gradient_suite(eps, tolerance);
  for (const auto& g : result.groups) {
    std::printf("%-28s %7zu entries  max rel err %.3e  %s\n", g.group.c_str(), g.entries, g.max_rel_error,
                g.max_rel_error <= tolerance ? "ok" : "FAIL");
  }
  const bool ok = result.passed();
  std::printf("%s (tolerance %.0e, eps %.0e)\n", ok ? "all groups pass" : "gradient check failed", tolerance, eps);
  return ok ? 0 : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal misinformation classifier with scene-graph fusion"};
  app.require_subcommand(1);

  harness::SynthSpec spec;
  std::string synth_out, signal = "mixed";
  bool probe = false;
  auto* gen = app.add_subcommand("gen-synth", "Generate a planted-signal synthetic corpus");
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--n-train", spec.n_train);
  gen->add_option("--n-test", spec.n_test);
  gen->add_option("--balance", spec.balance, "Fraction of fake examples");
  gen->add_option("--seed", spec.seed);
  gen->add_option("--signal", signal, "text, image, tsg, vsg or mixed");
  gen->add_option("--primary-share", spec.primary_share, "Share of fakes carrying the primary signal");
  gen->add_option("--vocab-size", spec.vocab_size);
  gen->add_option("--image-size", spec.image_size);
  gen->add_option("--min-triples", spec.min_triples);
  gen->add_option("--max-triples", spec.max_triples);
  gen->add_flag("--probe", probe, "Report a bag-of-words probe accuracy");

  std::string config_path;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Run an experiment config (training, evaluation, artifacts)");
  train->add_option("--config", config_path)->required();
  train->add_flag("--quiet", quiet, "Only print the final summary");

  std::string checkpoint, run_dir, split = "test";
  auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--run-dir", run_dir, "Directory with run_config.json and vocab.txt");
  eval->add_option("--split", split);

  std::string record, method = "exact", explain_out;
  std::size_t samples = 1000;
  std::uint64_t explain_seed = 1;
  bool as_text = false;
  auto* expl = app.add_subcommand("explain", "Shapley attribution for one record");
  expl->add_option("--checkpoint", checkpoint)->required();
  expl->add_option("--run-dir", run_dir);
  expl->add_option("--record", record)->required();
  expl->add_option("--method", method, "exact or permutation");
  expl->add_option("--samples", samples);
  expl->add_option("--seed", explain_seed);
  expl->add_flag("--text", as_text, "Plain-text rendering instead of JSON");
  expl->add_option("--out", explain_out);

  int cmsg_type = 0;
  std::string tsg_path, vsg_path, cmsg_out, words_path;
  std::optional<double> threshold;
  auto* cmsg = app.add_subcommand("cmsg-build", "Fuse a TSG and a VSG into one graph");
  cmsg->add_option("--type", cmsg_type)->required();
  cmsg->add_option("--tsg", tsg_path)->required();
  cmsg->add_option("--vsg", vsg_path)->required();
  cmsg->add_option("--out", cmsg_out)->required();
  cmsg->add_option("--threshold", threshold);
  cmsg->add_option("--word-vectors", words_path);

  std::string graph_path, n2v_out;
  embeddings::Node2VecConfig n2v;
  auto* n2v_cmd = app.add_subcommand("node2vec", "Embed the nodes of a scene graph");
  n2v_cmd->add_option("--graph", graph_path)->required();
  n2v_cmd->add_option("--p", n2v.p);
  n2v_cmd->add_option("--q", n2v.q);
  n2v_cmd->add_option("--dim", n2v.embedding_dim);
  n2v_cmd->add_option("--walk-length", n2v.walk_length);
  n2v_cmd->add_option("--walks", n2v.walks_per_node);
  n2v_cmd->add_option("--window", n2v.window);
  n2v_cmd->add_option("--epochs", n2v.epochs);
  n2v_cmd->add_option("--seed", n2v.seed);
  n2v_cmd->add_option("--out", n2v_out);

  double eps = 1e-5, tolerance = 1e-4;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every parameter group");
  grad->add_option("--eps", eps);
  grad->add_option("--tolerance", tolerance);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) {
      spec.signal = harness::parse_signal(signal);
      return gen_synth_cmd(spec, synth_out, probe);
    }
    if (*train) return train_cmd(config_path, quiet);
    if (*eval) return eval_cmd(checkpoint, run_dir, split);
    if (*expl) return explain_cmd(checkpoint, run_dir, record, method, samples, explain_seed, as_text, explain_out);
    if (*cmsg) return cmsg_cmd(cmsg_type, tsg_path, vsg_path, cmsg_out, threshold, words_path);
    if (*n2v_cmd) return node2vec_cmd(graph_path, n2v, n2v_out);
    if (*grad) return gradcheck_cmd(eps, tolerance);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
