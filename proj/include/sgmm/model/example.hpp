#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgmm/embeddings/node2vec.hpp"
#include "sgmm/embeddings/word_vectors.hpp"
#include "sgmm/gsgm/gsgm.hpp"
#include "sgmm/scenegraph/cmsg.hpp"
#include "sgmm/scenegraph/scene_graph.hpp"
#include "sgmm/tem/encoder.hpp"
#include "sgmm/tem/image.hpp"
#include "sgmm/tem/text.hpp"

namespace sgmm::model {

enum class Split { kTrain, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view s);

// Label convention: fake = 1, real = 0.
struct Example {
  std::string id;
  std::string text;
  tem::Image image;
  scenegraph::SceneGraph tsg;
  scenegraph::SceneGraph vsg;
  int label = 0;
  Split split = Split::kTrain;
};

enum class FusionVariant { kBase, kCmsg1, kCmsg2, kCmsg3 };

std::string_view to_string(FusionVariant v);
FusionVariant parse_fusion(std::string_view s);

struct Ablation {
  bool no_text = false;
  bool no_image = false;
  bool no_tsg = false;
  bool no_vsg = false;

  bool any() const { return no_text || no_image || no_tsg || no_vsg; }
  // "full" or the set flags joined by '+', e.g. "no_tsg+no_image".
  std::string name() const;
  // ConfigError when all four flags are set.
  void validate() const;
  friend bool operator==(const Ablation&, const Ablation&) = default;
};

// Parses "full", "none", "" or '+'-separated flag names.
Ablation parse_ablation(std::string_view s);

// Model-ready form of an Example: token ids, patch rows, and graph inputs
// with their feature matrices.
struct PreparedExample {
  std::string id;
  int label = 0;
  FusionVariant fusion = FusionVariant::kBase;
  tem::TemInput tem;
  gsgm::GraphInput tsg;
  gsgm::GraphInput vsg;
  gsgm::GsgmMask graph_mask;
  // CMSG variants only.
  gsgm::GraphInput fused;
  std::optional<std::size_t> dummy;
  std::vector<std::size_t> tsg_to_fused;
  std::vector<std::size_t> vsg_to_fused;
};

struct PrepareOptions {
  const tem::Vocabulary* vocab = nullptr;
  const embeddings::WordVectorTable* words = nullptr;
  embeddings::FeatureMode feature_mode = embeddings::FeatureMode::kGlove;
  embeddings::Node2VecConfig node2vec;
  FusionVariant fusion = FusionVariant::kBase;
  std::optional<double> cmsg_threshold;
  std::uint64_t feature_seed = embeddings::kDefaultFeatureSeed;
  // Tokens are truncated so tokens + patches fit.
  std::size_t max_len = 128;
};

// Width of one node feature row under `mode`.
std::size_t node_feature_dim(const PrepareOptions& options);

// [n x d] node features of a graph, or undefined for an empty graph.
numkit::Tensor node_features(const scenegraph::SceneGraph& g, const PrepareOptions& options);

PreparedExample prepare_example(const Example& example, const PrepareOptions& options);

// no_text / no_image clear the TEM segments; no_tsg / no_vsg set the graph
// mask. Graph halves are never removed, only zeroed.
PreparedExample apply_ablation(PreparedExample example, const Ablation& ablation);

}  // namespace sgmm::model
