#include "sgmm/scenegraph/scene_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "sgmm/error.hpp"

namespace sgmm::scenegraph {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string edge_str(const SceneGraph& g, const Edge& e) {
  auto name = [&](std::size_t id) {
    if (id < g.nodes.size()) return std::to_string(id) + " \"" + g.nodes[id].label + "\"";
    return std::to_string(id);
  };
  return "edge " + name(e.src) + " -> " + name(e.dst);
}

bool admissible(NodeKind src, NodeKind dst) {
  switch (src) {
    case NodeKind::kObject:
      return dst == NodeKind::kRelationship || dst == NodeKind::kAttribute;
    case NodeKind::kRelationship:
      return dst == NodeKind::kObject;
    case NodeKind::kAttribute:
      return false;
  }
  return false;
}

const Json& require_field(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError(where + ": missing field \"" + key + "\"");
  return *it;
}

std::size_t require_index(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw FieldError(where + ": field \"" + key + "\" must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kObject:
      return "object";
    case NodeKind::kAttribute:
      return "attribute";
    case NodeKind::kRelationship:
      return "relationship";
  }
  return "?";
}

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kText:
      return "text";
    case Modality::kVisual:
      return "visual";
    case Modality::kFused:
      return "fused";
  }
  return "?";
}

NodeKind parse_kind(std::string_view s) {
  if (s == "object") return NodeKind::kObject;
  if (s == "attribute") return NodeKind::kAttribute;
  if (s == "relationship") return NodeKind::kRelationship;
  throw FieldError("unknown node kind \"" + std::string(s) + "\"");
}

Modality parse_modality(std::string_view s) {
  if (s == "text") return Modality::kText;
  if (s == "visual") return Modality::kVisual;
  if (s == "fused") return Modality::kFused;
  throw FieldError("unknown modality \"" + std::string(s) + "\"");
}

std::string normalize_label(std::string_view label) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normaliser unavailable");
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(label.data(), static_cast<std::int32_t>(label.size())));
  text.toLower(icu::Locale::getRoot());
  icu::UnicodeString normalized = nfc->normalize(text, status);
  if (U_FAILURE(status)) throw FieldError("label is not valid Unicode");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::vector<Violation> validate_scene_graph(const SceneGraph& g) {
  std::vector<Violation> out;
  const std::size_t n = g.nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = g.nodes[i];
    if (node.id != i) {
      out.push_back({Violation::Code::kNonDenseId,
                     "node at position " + std::to_string(i) + " has id " + std::to_string(node.id) +
                         "; ids must be unique and dense",
                     std::nullopt, i});
    }
    if (node.label.empty() || is_space(node.label.front()) || is_space(node.label.back())) {
      out.push_back({Violation::Code::kBadLabel,
                     "node " + std::to_string(i) + " has an empty or padded label", std::nullopt, i});
    }
  }
  if (g.dummy && *g.dummy >= n) {
    out.push_back({Violation::Code::kBadDummy, "dummy index out of range", std::nullopt, g.dummy});
  }

  std::vector<int> rel_in(n, 0), rel_out(n, 0);
  const bool strict = g.modality != Modality::kFused;
  for (const auto& e : g.edges) {
    if (e.src >= n || e.dst >= n) {
      out.push_back({Violation::Code::kDanglingEdge, edge_str(g, e) + " references a missing node",
                     e, std::nullopt});
      continue;
    }
    if (!strict) continue;
    const auto sk = g.nodes[e.src].kind;
    const auto dk = g.nodes[e.dst].kind;
    if (!admissible(sk, dk)) {
      out.push_back({Violation::Code::kInadmissibleEdge,
                     edge_str(g, e) + " (" + std::string(to_string(sk)) + " -> " +
                         std::string(to_string(dk)) + ") is not an admissible pattern",
                     e, std::nullopt});
      continue;
    }
    if (dk == NodeKind::kRelationship) ++rel_in[e.dst];
    if (sk == NodeKind::kRelationship) ++rel_out[e.src];
  }
  if (strict) {
    for (std::size_t i = 0; i < n; ++i) {
      if (g.nodes[i].kind != NodeKind::kRelationship) continue;
      if (rel_in[i] == 0) {
        out.push_back({Violation::Code::kRelationshipWithoutSubject,
                       "relationship node " + std::to_string(i) + " \"" + g.nodes[i].label +
                           "\" has no incoming object edge",
                       std::nullopt, i});
      }
      if (rel_out[i] == 0) {
        out.push_back({Violation::Code::kRelationshipWithoutObject,
                       "relationship node " + std::to_string(i) + " \"" + g.nodes[i].label +
                           "\" has no outgoing object edge",
                       std::nullopt, i});
      }
    }
  }
  return out;
}

void canonicalize(SceneGraph& g) { std::sort(g.edges.begin(), g.edges.end()); }

SceneGraph parse_scene_graph(std::string_view bytes, Modality modality) {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scene graph: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw FieldError("scene graph: top level must be an object");
  const auto& nodes = require_field(doc, "nodes", "scene graph");
  const auto& edges = require_field(doc, "edges", "scene graph");
  if (!nodes.is_array()) throw FieldError("scene graph: \"nodes\" must be an array");
  if (!edges.is_array()) throw FieldError("scene graph: \"edges\" must be an array");

  SceneGraph g;
  g.modality = modality;
  if (auto it = doc.find("modality"); it != doc.end()) {
    if (!it->is_string()) throw FieldError("scene graph: \"modality\" must be a string");
    g.modality = parse_modality(it->get<std::string>());
  }
  if (auto it = doc.find("dummy"); it != doc.end()) {
    g.dummy = require_index(doc, "dummy", "scene graph");
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& jn = nodes[i];
    const std::string where = "node #" + std::to_string(i);
    if (!jn.is_object()) throw FieldError(where + ": must be an object");
    Node node;
    node.id = require_index(jn, "id", where);
    const auto& kind = require_field(jn, "kind", where);
    if (!kind.is_string()) throw FieldError(where + ": \"kind\" must be a string");
    try {
      node.kind = parse_kind(kind.get<std::string>());
    } catch (const FieldError& e) {
      throw FieldError(where + ": " + e.what());
    }
    const auto& label = require_field(jn, "label", where);
    if (!label.is_string()) throw FieldError(where + ": \"label\" must be a string");
    node.label = normalize_label(label.get<std::string>());
    g.nodes.push_back(std::move(node));
  }
  std::stable_sort(g.nodes.begin(), g.nodes.end(),
                   [](const Node& a, const Node& b) { return a.id < b.id; });

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& je = edges[i];
    const std::string where = "edge #" + std::to_string(i);
    if (!je.is_object()) throw FieldError(where + ": must be an object");
    g.edges.push_back({require_index(je, "src", where), require_index(je, "dst", where)});
  }
  canonicalize(g);

  const auto violations = validate_scene_graph(g);
  if (!violations.empty()) {
    std::string msg = "scene graph failed validation:";
    for (const auto& v : violations) msg += "\n  " + v.message;
    throw ValidationError(msg);
  }
  return g;
}

std::string serialize_scene_graph(const SceneGraph& g) {
  OrderedJson doc;
  OrderedJson nodes = OrderedJson::array();
  std::vector<const Node*> by_id;
  for (const auto& n : g.nodes) by_id.push_back(&n);
  std::stable_sort(by_id.begin(), by_id.end(),
                   [](const Node* a, const Node* b) { return a->id < b->id; });
  for (const auto* n : by_id) {
    OrderedJson jn;
    jn["id"] = n->id;
    jn["kind"] = to_string(n->kind);
    jn["label"] = n->label;
    nodes.push_back(std::move(jn));
  }
  auto sorted_edges = g.edges;
  std::sort(sorted_edges.begin(), sorted_edges.end());
  OrderedJson edges = OrderedJson::array();
  for (const auto& e : sorted_edges) {
    OrderedJson je;
    je["src"] = e.src;
    je["dst"] = e.dst;
    edges.push_back(std::move(je));
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  if (g.modality == Modality::kFused) doc["modality"] = to_string(g.modality);
  if (g.dummy) doc["dummy"] = *g.dummy;
  return doc.dump(2) + "\n";
}

SceneGraph load_scene_graph(const std::filesystem::path& path, Modality modality) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scene graph " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_graph(ss.str(), modality);
}

void save_scene_graph(const std::filesystem::path& path, const SceneGraph& g) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_scene_graph(g);
  if (!out) throw IoError("write failed for " + path.string());
}

std::size_t PlainGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& nb : neighbors) total += nb.size();
  return total / 2;
}

std::vector<double> PlainGraph::dense_adjacency() const {
  const std::size_t n = neighbors.size();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : neighbors[i]) a[i * n + j] = 1.0;
  return a;
}

PlainGraph to_plain_graph(const SceneGraph& g) {
  PlainGraph p;
  p.neighbors.resize(g.nodes.size());
  for (const auto& e : g.edges) {
    if (e.src == e.dst || e.src >= g.nodes.size() || e.dst >= g.nodes.size()) continue;
    p.neighbors[e.src].push_back(e.dst);
    p.neighbors[e.dst].push_back(e.src);
  }
  for (auto& nb : p.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return p;
}

}  // namespace sgmm::scenegraph
