#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sgmm/scenegraph/scene_graph.hpp"

namespace sgmm::embeddings {

struct Node2VecConfig {
  double p = 1.0;
  double q = 1.0;
  std::size_t walk_length = 20;
  std::size_t walks_per_node = 10;
  std::size_t window = 5;
  std::size_t embedding_dim = 32;
  std::size_t negative_samples = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  // Throws ConfigError on p <= 0, q <= 0, walk_length < 2 or dim < 1.
  void validate() const;
};

using Walk = std::vector<std::size_t>;

// Second-order transition distribution from `cur`, aligned with
// g.neighbors[cur]. Without a previous node the step is uniform.
std::vector<double> transition_probabilities(const scenegraph::PlainGraph& g,
                                             std::optional<std::size_t> prev, std::size_t cur,
                                             double p, double q);

// walks_per_node walks from every node, ordered by (walk index, start node).
// Each walk draws from its own stream keyed by (seed, node, walk index).
std::vector<Walk> node2vec_walks(const scenegraph::PlainGraph& g, const Node2VecConfig& config);

// Skip-gram with negative sampling over the walks; one unit-norm row per node.
std::vector<std::vector<double>> skipgram_train(const std::vector<Walk>& walks,
                                                std::size_t num_nodes, const Node2VecConfig& config);

// Walks + skip-gram in one call.
std::vector<std::vector<double>> node2vec_embed(const scenegraph::PlainGraph& g,
                                                const Node2VecConfig& config);

// Loss and gradients of one (center, context, negatives) SGNS term:
// -log s(u_o . v_c) - sum_k log s(-u_k . v_c).
struct SgnsGradient {
  double loss = 0.0;
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

void sgns_gradient(std::span<const double> center, std::span<const double> context,
                   const std::vector<std::span<const double>>& negatives, SgnsGradient& out);

}  // namespace sgmm::embeddings
