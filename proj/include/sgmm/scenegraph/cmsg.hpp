#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgmm/scenegraph/scene_graph.hpp"

namespace sgmm::scenegraph {

enum class CmsgVariant { kType1, kType2, kType3 };

// Fusion recipe; the similarity threshold is meaningful for Type 3 only.
struct CmsgSpec {
  CmsgVariant variant = CmsgVariant::kType1;
  std::optional<double> threshold;

  // Throws ConfigError unless threshold is present iff variant is Type 3
  // and lies in (0, 1].
  void validate() const;
};

// A fused graph plus where each input node ended up.
struct CmsgResult {
  SceneGraph graph;
  std::vector<std::size_t> tsg_to_fused;
  std::vector<std::size_t> vsg_to_fused;
  std::size_t merges = 0;
  std::vector<std::string> warnings;
};

inline constexpr const char* kDummyLabel = "<dummy>";

// TSG nodes keep their ids, VSG nodes follow; no merging.
CmsgResult disjoint_union(const SceneGraph& tsg, const SceneGraph& vsg);

// Disjoint union plus one object node linked to every other node.
CmsgResult cmsg_type1(const SceneGraph& tsg, const SceneGraph& vsg);

// Unifies nodes whose (kind, label) occurs in both graphs. When a key occurs
// more than once within one graph, its lowest-id node is the one merged.
CmsgResult cmsg_type2(const SceneGraph& tsg, const SceneGraph& vsg);

using NodeFeaturizer = std::function<std::vector<double>(const Node&)>;

// Greedy cosine matching: same-kind (t, v) pairs with similarity >= threshold,
// best first, ties by (t.id, v.id), each node merged at most once. Merged
// nodes keep the TSG label. Pairs with a zero-norm feature are skipped and
// reported in `warnings`. A threshold above 1 yields the disjoint union.
CmsgResult cmsg_type3(const SceneGraph& tsg, const SceneGraph& vsg,
                      const NodeFeaturizer& featurize, double threshold);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sgmm::scenegraph
