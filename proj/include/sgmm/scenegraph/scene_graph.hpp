#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sgmm::scenegraph {

enum class NodeKind { kObject, kAttribute, kRelationship };
enum class Modality { kText, kVisual, kFused };

std::string_view to_string(NodeKind kind);
std::string_view to_string(Modality modality);
NodeKind parse_kind(std::string_view s);
Modality parse_modality(std::string_view s);

struct Node {
  std::size_t id = 0;
  NodeKind kind = NodeKind::kObject;
  std::string label;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Typed scene graph. Nodes are stored by id (nodes[i].id == i) and edges in
// lexicographic order; the parser and every builder keep that form.
struct SceneGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  Modality modality = Modality::kText;
  // Index of the linking node of a dummy-node fusion, if any.
  std::optional<std::size_t> dummy;

  std::size_t size() const noexcept { return nodes.size(); }
  bool empty() const noexcept { return nodes.empty(); }
  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

struct Violation {
  enum class Code {
    kNonDenseId,
    kBadLabel,
    kDanglingEdge,
    kInadmissibleEdge,
    kRelationshipWithoutSubject,
    kRelationshipWithoutObject,
    kBadDummy,
  };
  Code code;
  std::string message;
  std::optional<Edge> edge;
  std::optional<std::size_t> node;
};

// Admissible edges: object->relationship, relationship->object,
// object->attribute; each relationship needs an incoming and an outgoing
// object edge. Fused graphs only require ids, labels and endpoints to be
// well formed. Never throws.
std::vector<Violation> validate_scene_graph(const SceneGraph& g);

// Lowercase + Unicode NFC.
std::string normalize_label(std::string_view label);

// Parses the JSON scene-graph format, then validates. Plain files carry no
// modality, so the caller supplies it; fused files record it themselves.
SceneGraph parse_scene_graph(std::string_view bytes, Modality modality = Modality::kText);

// Canonical JSON: two-space indent, nodes by id, edges sorted, trailing
// newline. Fused graphs additionally carry "modality" and "dummy".
std::string serialize_scene_graph(const SceneGraph& g);

SceneGraph load_scene_graph(const std::filesystem::path& path, Modality modality = Modality::kText);
void save_scene_graph(const std::filesystem::path& path, const SceneGraph& g);

// Sorts edges into canonical order in place.
void canonicalize(SceneGraph& g);

// Undirected simple view of a scene graph: symmetric, deduplicated,
// no self-loops. neighbors[i] is sorted.
struct PlainGraph {
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const noexcept { return neighbors.size(); }
  std::size_t edge_count() const;
  // Dense row-major n x n 0/1 matrix.
  std::vector<double> dense_adjacency() const;
};

PlainGraph to_plain_graph(const SceneGraph& g);

}  // namespace sgmm::scenegraph
