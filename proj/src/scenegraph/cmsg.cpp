#include "sgmm/scenegraph/cmsg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "sgmm/error.hpp"

namespace sgmm::scenegraph {
namespace {

// Builds the fused graph given (tsg id, vsg id) pairs to unify.
CmsgResult merge(const SceneGraph& tsg, const SceneGraph& vsg,
                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  CmsgResult r;
  r.graph.modality = Modality::kFused;
  r.graph.nodes = tsg.nodes;
  r.tsg_to_fused.resize(tsg.size());
  for (std::size_t i = 0; i < tsg.size(); ++i) r.tsg_to_fused[i] = i;

  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  r.vsg_to_fused.assign(vsg.size(), kUnset);
  for (const auto& [t, v] : pairs) r.vsg_to_fused[v] = t;
  r.merges = pairs.size();
  for (std::size_t v = 0; v < vsg.size(); ++v) {
    if (r.vsg_to_fused[v] != kUnset) continue;
    const std::size_t id = r.graph.nodes.size();
    r.graph.nodes.push_back({id, vsg.nodes[v].kind, vsg.nodes[v].label});
    r.vsg_to_fused[v] = id;
  }

  r.graph.edges = tsg.edges;
  for (const auto& e : vsg.edges) {
    r.graph.edges.push_back({r.vsg_to_fused.at(e.src), r.vsg_to_fused.at(e.dst)});
  }
  std::sort(r.graph.edges.begin(), r.graph.edges.end());
  r.graph.edges.erase(std::unique(r.graph.edges.begin(), r.graph.edges.end()),
                      r.graph.edges.end());
  return r;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void CmsgSpec::validate() const {
  if (variant == CmsgVariant::kType3) {
    if (!threshold) throw ConfigError("CMSG Type 3 requires a similarity threshold");
    if (!(*threshold > 0.0 && *threshold <= 1.0)) {
      throw ConfigError("CMSG similarity threshold must lie in (0, 1]");
    }
  } else if (threshold) {
    throw ConfigError("similarity threshold only applies to CMSG Type 3");
  }
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (na * nb);
}

CmsgResult disjoint_union(const SceneGraph& tsg, const SceneGraph& vsg) {
  return merge(tsg, vsg, {});
}

CmsgResult cmsg_type1(const SceneGraph& tsg, const SceneGraph& vsg) {
  CmsgResult r = disjoint_union(tsg, vsg);
  const std::size_t dummy = r.graph.nodes.size();
  r.graph.nodes.push_back({dummy, NodeKind::kObject, kDummyLabel});
  for (std::size_t i = 0; i < dummy; ++i) r.graph.edges.push_back({dummy, i});
  std::sort(r.graph.edges.begin(), r.graph.edges.end());
  r.graph.dummy = dummy;
  return r;
}

CmsgResult cmsg_type2(const SceneGraph& tsg, const SceneGraph& vsg) {
  using Key = std::pair<NodeKind, std::string>;
  std::map<Key, std::size_t> first_in_vsg;
  for (const auto& n : vsg.nodes) first_in_vsg.emplace(Key{n.kind, n.label}, n.id);
  std::map<Key, bool> claimed;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& n : tsg.nodes) {
    Key key{n.kind, n.label};
    auto it = first_in_vsg.find(key);
    if (it == first_in_vsg.end() || claimed[key]) continue;
    claimed[key] = true;
    pairs.emplace_back(n.id, it->second);
  }
  return merge(tsg, vsg, pairs);
}

CmsgResult cmsg_type3(const SceneGraph& tsg, const SceneGraph& vsg,
                      const NodeFeaturizer& featurize, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("CMSG similarity threshold must be positive");
  std::vector<std::vector<double>> tf, vf;
  std::vector<double> tn, vn;
  for (const auto& n : tsg.nodes) {
    tf.push_back(featurize(n));
    tn.push_back(norm(tf.back()));
  }
  for (const auto& n : vsg.nodes) {
    vf.push_back(featurize(n));
    vn.push_back(norm(vf.back()));
  }

  std::vector<std::string> warnings;
  for (std::size_t t = 0; t < tsg.size(); ++t) {
    if (tn[t] == 0.0) warnings.push_back("tsg node " + std::to_string(t) + " \"" +
                                         tsg.nodes[t].label + "\" has a zero feature; skipped");
  }
  for (std::size_t v = 0; v < vsg.size(); ++v) {
    if (vn[v] == 0.0) warnings.push_back("vsg node " + std::to_string(v) + " \"" +
                                         vsg.nodes[v].label + "\" has a zero feature; skipped");
  }

  struct Candidate {
    double sim;
    std::size_t t, v;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < tsg.size(); ++t) {
    if (tn[t] == 0.0) continue;
    for (std::size_t v = 0; v < vsg.size(); ++v) {
      if (vn[v] == 0.0 || tsg.nodes[t].kind != vsg.nodes[v].kind) continue;
      const double sim = cosine_similarity(tf[t], vf[v]);
      if (sim >= threshold) candidates.push_back({sim, t, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return std::tie(a.t, a.v) < std::tie(b.t, b.v);
  });

  std::vector<bool> t_used(tsg.size(), false), v_used(vsg.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& c : candidates) {
    if (t_used[c.t] || v_used[c.v]) continue;
    t_used[c.t] = v_used[c.v] = true;
    pairs.emplace_back(c.t, c.v);
  }
  CmsgResult r = merge(tsg, vsg, pairs);
  r.warnings = std::move(warnings);
  return r;
}

}  // namespace sgmm::scenegraph
