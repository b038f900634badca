#pragma once

#include <optional>
#include <string>

#include "sgmm/numkit/params.hpp"
#include "sgmm/numkit/tensor.hpp"
#include "sgmm/scenegraph/scene_graph.hpp"

namespace sgmm::gsgm {

using numkit::Tensor;

struct GcnLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out], undefined when disabled

  static GcnLayer init(std::size_t in, std::size_t out, numkit::Rng& rng, bool bias = true);
  void collect(const std::string& prefix, numkit::ParamList& out) const;
};

// Two GCN layers, each followed by ReLU.
struct GcnStack {
  GcnLayer first;
  GcnLayer second;

  static GcnStack init(std::size_t in, std::size_t hidden, std::size_t out, numkit::Rng& rng,
                       bool bias = true);
  std::size_t input_dim() const { return first.weight.dim(0); }
  std::size_t output_dim() const { return second.weight.dim(1); }
  void collect(const std::string& prefix, numkit::ParamList& out) const;
};

struct GsgmParams {
  GcnStack tsg;
  GcnStack vsg;

  static GsgmParams init(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                         numkit::Rng& rng, bool bias = true);
  std::size_t output_dim() const { return tsg.output_dim(); }
  void collect(const std::string& prefix, numkit::ParamList& out) const;
};

// D^-1/2 (A + I) D^-1/2 as a constant [n x n] tensor.
Tensor normalized_adjacency(const scenegraph::PlainGraph& g);

// a_hat X W (+ b), with a_hat from normalized_adjacency. No activation.
Tensor gcn_propagate(const Tensor& a_hat, const Tensor& features, const GcnLayer& layer);
Tensor gcn_propagate(const scenegraph::PlainGraph& g, const Tensor& features, const GcnLayer& layer);

// ReLU(GCN2(ReLU(GCN1(X)))) per node, [n x out].
Tensor node_states(const Tensor& a_hat, const Tensor& features, const GcnStack& gnn);

struct GraphEncoding {
  Tensor embedding;  // [out]
  bool empty = false;
};

// Mean-pooled node states. An empty graph gives a zero vector and empty=true.
GraphEncoding encode_graph(const Tensor& a_hat, const Tensor& features, const GcnStack& gnn);
GraphEncoding encode_graph(const scenegraph::SceneGraph& g, const Tensor& features, const GcnStack& gnn);

// Graph input ready for the encoders: normalized adjacency and feature rows.
struct GraphInput {
  Tensor a_hat;     // [n x n], or undefined when n == 0
  Tensor features;  // [n x d], or undefined when n == 0
  std::size_t size() const { return a_hat.defined() ? a_hat.dim(0) : 0; }
};

GraphInput make_graph_input(const scenegraph::PlainGraph& g, const Tensor& features);

struct GsgmMask {
  bool no_tsg = false;
  bool no_vsg = false;
};

// E_SG = E_TSG ++ E_VSG; a masked half is zeros of the same length.
Tensor gsgm_forward(const GraphInput& tsg, const GraphInput& vsg, const GsgmParams& params,
                    const GsgmMask& mask = {});

enum class FusedReadout { kDummy, kMeanPool };

// Single GNN over a fused graph. kDummy reads the dummy node's state after
// the second layer; StructuralError when no dummy index is given.
Tensor gsgm_forward_cmsg(const GraphInput& fused, const GcnStack& gnn, FusedReadout readout,
                         std::optional<std::size_t> dummy);

}  // namespace sgmm::gsgm
