#include "sgmm/gsgm/gsgm.hpp"

#include <cmath>

#include "sgmm/error.hpp"
#include "sgmm/numkit/ops.hpp"

namespace sgmm::gsgm {

using namespace numkit;

GcnLayer GcnLayer::init(std::size_t in, std::size_t out, Rng& rng, bool bias) {
  GcnLayer l;
  l.weight = init_uniform({in, out}, in, rng);
  if (bias) l.bias = init_uniform({out}, in, rng);
  return l;
}

void GcnLayer::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

GcnStack GcnStack::init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng, bool bias) {
  GcnStack s;
  s.first = GcnLayer::init(in, hidden, rng, bias);
  s.second = GcnLayer::init(hidden, out, rng, bias);
  return s;
}

void GcnStack::collect(const std::string& prefix, ParamList& out) const {
  first.collect(prefix + ".gcn1", out);
  second.collect(prefix + ".gcn2", out);
}

GsgmParams GsgmParams::init(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                            Rng& rng, bool bias) {
  GsgmParams p;
  p.tsg = GcnStack::init(input_dim, hidden_dim, output_dim, rng, bias);
  p.vsg = GcnStack::init(input_dim, hidden_dim, output_dim, rng, bias);
  return p;
}

void GsgmParams::collect(const std::string& prefix, ParamList& out) const {
  tsg.collect(prefix + ".tsg", out);
  vsg.collect(prefix + ".vsg", out);
}

Tensor normalized_adjacency(const scenegraph::PlainGraph& g) {
  const std::size_t n = g.size();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.neighbors[i].size() + 1));
  }
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    a[i * n + i] = inv_sqrt[i] * inv_sqrt[i];
    for (auto j : g.neighbors[i]) a[i * n + j] = inv_sqrt[i] * inv_sqrt[j];
  }
  return Tensor::from({n, n}, std::move(a));
}

Tensor gcn_propagate(const Tensor& a_hat, const Tensor& features, const GcnLayer& layer) {
  if (features.rank() != 2 || features.dim(0) != a_hat.dim(0)) {
    throw ShapeError("gcn_propagate: " + std::to_string(features.rank() == 2 ? features.dim(0) : 0) +
                     " feature rows for " + std::to_string(a_hat.dim(0)) + " nodes");
  }
  Tensor out = matmul(a_hat, matmul(features, layer.weight));
  if (layer.bias.defined()) out = add(out, layer.bias);
  return out;
}

Tensor gcn_propagate(const scenegraph::PlainGraph& g, const Tensor& features, const GcnLayer& layer) {
  return gcn_propagate(normalized_adjacency(g), features, layer);
}

Tensor node_states(const Tensor& a_hat, const Tensor& features, const GcnStack& gnn) {
  Tensor h = relu(gcn_propagate(a_hat, features, gnn.first));
  return relu(gcn_propagate(a_hat, h, gnn.second));
}

GraphEncoding encode_graph(const Tensor& a_hat, const Tensor& features, const GcnStack& gnn) {
  if (!a_hat.defined() || a_hat.dim(0) == 0) return {Tensor::zeros({gnn.output_dim()}), true};
  return {mean_pool(node_states(a_hat, features, gnn), 0), false};
}

GraphEncoding encode_graph(const scenegraph::SceneGraph& g, const Tensor& features, const GcnStack& gnn) {
  if (g.empty()) return {Tensor::zeros({gnn.output_dim()}), true};
  return encode_graph(normalized_adjacency(scenegraph::to_plain_graph(g)), features, gnn);
}

GraphInput make_graph_input(const scenegraph::PlainGraph& g, const Tensor& features) {
  if (g.size() == 0) return {};
  if (features.rank() != 2 || features.dim(0) != g.size()) {
    throw ShapeError("make_graph_input: feature rows do not match node count");
  }
  return {normalized_adjacency(g), features};
}

Tensor gsgm_forward(const GraphInput& tsg, const GraphInput& vsg, const GsgmParams& params,
                    const GsgmMask& mask) {
  const std::size_t d = params.output_dim();
  Tensor t = mask.no_tsg ? Tensor::zeros({d}) : encode_graph(tsg.a_hat, tsg.features, params.tsg).embedding;
  Tensor v = mask.no_vsg ? Tensor::zeros({d}) : encode_graph(vsg.a_hat, vsg.features, params.vsg).embedding;
  return concat({t, v});
}

Tensor gsgm_forward_cmsg(const GraphInput& fused, const GcnStack& gnn, FusedReadout readout,
                         std::optional<std::size_t> dummy) {
  if (readout == FusedReadout::kMeanPool) return encode_graph(fused.a_hat, fused.features, gnn).embedding;
  if (!dummy) throw StructuralError("dummy-node readout on a graph without a dummy node");
  if (*dummy >= fused.size()) throw StructuralError("dummy index out of range");
  return select_row(node_states(fused.a_hat, fused.features, gnn), *dummy);
}

}  // namespace sgmm::gsgm
