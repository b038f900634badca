#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "sgmm/error.hpp"
#include "sgmm/numkit/random.hpp"
#include "sgmm/scenegraph/cmsg.hpp"
#include "sgmm/scenegraph/scene_graph.hpp"

using namespace sgmm::scenegraph;

namespace {

SceneGraph make_graph(std::vector<std::pair<NodeKind, std::string>> nodes,
                      std::vector<Edge> edges, Modality m = Modality::kText) {
  SceneGraph g;
  g.modality = m;
  for (std::size_t i = 0; i < nodes.size(); ++i) g.nodes.push_back({i, nodes[i].first, nodes[i].second});
  g.edges = std::move(edges);
  canonicalize(g);
  return g;
}

// man -speaking-> podium, man -> tall
SceneGraph speaker() {
  return make_graph({{NodeKind::kObject, "man"},
                     {NodeKind::kRelationship, "speaking"},
                     {NodeKind::kObject, "podium"},
                     {NodeKind::kAttribute, "tall"}},
                    {{0, 1}, {1, 2}, {0, 3}});
}

const std::vector<std::string> kLabels = {"man", "boy", "dog", "car", "red", "on", "holding", "sign",
                                          "tall", "fox news"};

SceneGraph random_graph(sgmm::numkit::Rng& rng, Modality m = Modality::kText) {
  SceneGraph g;
  g.modality = m;
  const std::size_t objects = rng.below(5);
  auto add = [&](NodeKind k) {
    g.nodes.push_back({g.nodes.size(), k, kLabels[rng.below(kLabels.size())]});
    return g.nodes.size() - 1;
  };
  for (std::size_t i = 0; i < objects; ++i) add(NodeKind::kObject);
  if (objects > 0) {
    const std::size_t rels = rng.below(4);
    for (std::size_t i = 0; i < rels; ++i) {
      const auto r = add(NodeKind::kRelationship);
      g.edges.push_back({rng.below(objects), r});
      g.edges.push_back({r, rng.below(objects)});
      if (rng.below(2)) g.edges.push_back({rng.below(objects), r});
    }
    const std::size_t attrs = rng.below(3);
    for (std::size_t i = 0; i < attrs; ++i) {
      const auto a = add(NodeKind::kAttribute);
      g.edges.push_back({rng.below(objects), a});
    }
  }
  canonicalize(g);
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

std::size_t shared_keys(const SceneGraph& a, const SceneGraph& b) {
  std::set<std::pair<NodeKind, std::string>> ka, kb;
  for (const auto& n : a.nodes) ka.insert({n.kind, n.label});
  for (const auto& n : b.nodes) kb.insert({n.kind, n.label});
  std::size_t c = 0;
  for (const auto& k : ka) c += kb.count(k);
  return c;
}

// Canonical form for isomorphism up to relabeling when labels inside each
// graph are unique: multiset of labelled nodes and labelled edges.
auto labelled_form(const SceneGraph& g) {
  std::multiset<std::pair<NodeKind, std::string>> nodes;
  std::multiset<std::pair<std::string, std::string>> edges;
  for (const auto& n : g.nodes) nodes.insert({n.kind, n.label});
  for (const auto& e : g.edges) edges.insert({g.nodes[e.src].label, g.nodes[e.dst].label});
  return std::make_pair(nodes, edges);
}

bool has_code(const std::vector<Violation>& vs, Violation::Code c) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.code == c; });
}

}  // namespace

TEST(ParseSceneGraph, SingleNode) {
  auto g = parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object","label":"man"}],"edges":[]})");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.nodes[0].label, "man");
  EXPECT_TRUE(g.edges.empty());
}

TEST(ParseSceneGraph, ObjectToAttributeAccepted) {
  auto g = parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object","label":"man"},
    {"id":1,"kind":"attribute","label":"tall"}],"edges":[{"src":0,"dst":1}]})");
  EXPECT_EQ(g.edges.size(), 1u);
}

TEST(ParseSceneGraph, AttributeToObjectRejectedNamingEdge) {
  try {
    parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object","label":"man"},
      {"id":1,"kind":"attribute","label":"tall"}],"edges":[{"src":1,"dst":0}]})");
    FAIL() << "expected ValidationError";
  } catch (const sgmm::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("edge 1 \"tall\" -> 0 \"man\""), std::string::npos) << e.what();
  }
}

TEST(ParseSceneGraph, MalformedJsonReportsOffset) {
  try {
    parse_scene_graph(R"({"nodes": [}, "edges": []})");
    FAIL() << "expected ParseError";
  } catch (const sgmm::ParseError& e) {
    EXPECT_EQ(e.offset(), 12u);
  }
}

TEST(ParseSceneGraph, SchemaErrors) {
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[]})"), sgmm::FieldError);
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":0,"kind":"thing","label":"x"}],"edges":[]})"),
               sgmm::FieldError);
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":-1,"kind":"object","label":"x"}],"edges":[]})"),
               sgmm::FieldError);
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object"}],"edges":[]})"),
               sgmm::FieldError);
  EXPECT_THROW(parse_scene_graph(R"([1,2])"), sgmm::FieldError);
}

TEST(ParseSceneGraph, NormalizesLabels) {
  // "Cafe" + combining acute accent normalizes to the precomposed form.
  auto g = parse_scene_graph(
      "{\"nodes\":[{\"id\":0,\"kind\":\"object\",\"label\":\"CAFE\xCC\x81\"}],\"edges\":[]}");
  EXPECT_EQ(g.nodes[0].label, "caf\xC3\xA9");
  EXPECT_EQ(normalize_label("Fox News"), "fox news");
}

TEST(ParseSceneGraph, RejectsPaddedAndEmptyLabels) {
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object","label":" man"}],"edges":[]})"),
               sgmm::ValidationError);
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object","label":""}],"edges":[]})"),
               sgmm::ValidationError);
}

TEST(ParseSceneGraph, NodesOutOfOrderAreSorted) {
  auto g = parse_scene_graph(R"({"nodes":[{"id":1,"kind":"attribute","label":"tall"},
    {"id":0,"kind":"object","label":"man"}],"edges":[{"src":0,"dst":1}]})");
  EXPECT_EQ(g.nodes[0].label, "man");
  EXPECT_EQ(g.nodes[1].label, "tall");
}

TEST(ParseSceneGraph, DuplicateOrSparseIdsRejected) {
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":0,"kind":"object","label":"a"},
    {"id":0,"kind":"object","label":"b"}],"edges":[]})"),
               sgmm::ValidationError);
  EXPECT_THROW(parse_scene_graph(R"({"nodes":[{"id":1,"kind":"object","label":"a"}],"edges":[]})"),
               sgmm::ValidationError);
}

TEST(ValidateSceneGraph, TriplePatternValid) {
  EXPECT_TRUE(validate_scene_graph(speaker()).empty());
  EXPECT_TRUE(validate_scene_graph(SceneGraph{}).empty());
}

TEST(ValidateSceneGraph, IsolatedRelationshipFlagged) {
  auto g = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kRelationship, "on"}}, {});
  const auto vs = validate_scene_graph(g);
  EXPECT_TRUE(has_code(vs, Violation::Code::kRelationshipWithoutSubject));
  EXPECT_TRUE(has_code(vs, Violation::Code::kRelationshipWithoutObject));
}

TEST(ValidateSceneGraph, EnumeratesEdgePatterns) {
  // Every ordered kind pair on a two-node graph; only the three admissible
  // patterns escape an edge violation.
  const NodeKind kinds[] = {NodeKind::kObject, NodeKind::kAttribute, NodeKind::kRelationship};
  std::set<std::pair<NodeKind, NodeKind>> ok;
  for (auto a : kinds)
    for (auto b : kinds) {
      auto g = make_graph({{a, "x"}, {b, "y"}}, {{0, 1}});
      if (!has_code(validate_scene_graph(g), Violation::Code::kInadmissibleEdge)) ok.insert({a, b});
    }
  const std::set<std::pair<NodeKind, NodeKind>> expected = {
      {NodeKind::kObject, NodeKind::kRelationship},
      {NodeKind::kRelationship, NodeKind::kObject},
      {NodeKind::kObject, NodeKind::kAttribute}};
  EXPECT_EQ(ok, expected);
}

TEST(ValidateSceneGraph, RelationshipNeedsBothSides) {
  auto half = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kRelationship, "on"}}, {{0, 1}});
  auto vs = validate_scene_graph(half);
  EXPECT_FALSE(has_code(vs, Violation::Code::kRelationshipWithoutSubject));
  EXPECT_TRUE(has_code(vs, Violation::Code::kRelationshipWithoutObject));
}

TEST(ValidateSceneGraph, DanglingEdge) {
  auto g = make_graph({{NodeKind::kObject, "man"}}, {{0, 5}});
  EXPECT_TRUE(has_code(validate_scene_graph(g), Violation::Code::kDanglingEdge));
  g.modality = Modality::kFused;
  EXPECT_TRUE(has_code(validate_scene_graph(g), Violation::Code::kDanglingEdge));
}

TEST(PlainGraph, TwoNodes) {
  auto g = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kAttribute, "tall"}}, {{0, 1}});
  auto p = to_plain_graph(g);
  EXPECT_EQ(p.dense_adjacency(), (std::vector<double>{0, 1, 1, 0}));
}

TEST(PlainGraph, ParallelEdgesCollapse) {
  auto g = make_graph({{NodeKind::kObject, "a"}, {NodeKind::kObject, "b"}}, {{0, 1}, {1, 0}, {0, 1}},
                      Modality::kFused);
  EXPECT_EQ(to_plain_graph(g).edge_count(), 1u);
}

TEST(PlainGraph, TripleIsPath) {
  auto g = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kRelationship, "on"}, {NodeKind::kObject, "car"}},
                      {{0, 1}, {1, 2}});
  EXPECT_EQ(to_plain_graph(g).dense_adjacency(), (std::vector<double>{0, 1, 0, 1, 0, 1, 0, 1, 0}));
}

TEST(Serialize, CanonicalFormat) {
  const std::string expected = R"({
  "nodes": [
    {
      "id": 0,
      "kind": "object",
      "label": "man"
    },
    {
      "id": 1,
      "kind": "attribute",
      "label": "tall"
    }
  ],
  "edges": [
    {
      "src": 0,
      "dst": 1
    }
  ]
}
)";
  auto g = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kAttribute, "tall"}}, {{0, 1}});
  EXPECT_EQ(serialize_scene_graph(g), expected);
  EXPECT_EQ(serialize_scene_graph(g), serialize_scene_graph(parse_scene_graph(expected)));
}

TEST(Serialize, RandomRoundTrips) {
  sgmm::numkit::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_graph(rng);
    ASSERT_TRUE(validate_scene_graph(g).empty());
    const auto text = serialize_scene_graph(g);
    EXPECT_EQ(parse_scene_graph(text), g);
    EXPECT_EQ(serialize_scene_graph(parse_scene_graph(text)), text);
  }
}

TEST(Serialize, FusedRoundTripKeepsDummy) {
  auto r = cmsg_type1(speaker(), speaker());
  const auto text = serialize_scene_graph(r.graph);
  const auto back = parse_scene_graph(text);
  EXPECT_EQ(back, r.graph);
  ASSERT_TRUE(back.dummy.has_value());
  EXPECT_EQ(*back.dummy, 8u);
}

TEST(Serialize, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "sgmm_scenegraph_test.json";
  save_scene_graph(path, speaker());
  EXPECT_EQ(load_scene_graph(path), speaker());
  std::filesystem::remove(path);
  EXPECT_THROW(load_scene_graph(path), sgmm::IoError);
}

TEST(CmsgType1, CountsAndDummyDegree) {
  auto tsg = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kRelationship, "on"}, {NodeKind::kObject, "car"}},
                        {{0, 1}, {1, 2}});
  auto vsg = make_graph({{NodeKind::kObject, "dog"},
                         {NodeKind::kRelationship, "near"},
                         {NodeKind::kObject, "tree"},
                         {NodeKind::kAttribute, "green"}},
                        {{0, 1}, {1, 2}, {2, 3}});
  auto r = cmsg_type1(tsg, vsg);
  EXPECT_EQ(r.graph.size(), 8u);
  ASSERT_TRUE(r.graph.dummy);
  const auto d = *r.graph.dummy;
  EXPECT_EQ(r.graph.nodes[d].label, kDummyLabel);
  EXPECT_EQ(r.graph.nodes[d].kind, NodeKind::kObject);
  EXPECT_EQ(to_plain_graph(r.graph).neighbors[d].size(), 7u);
}

TEST(CmsgType1, EmptyInputs) {
  auto r = cmsg_type1(SceneGraph{}, SceneGraph{});
  EXPECT_EQ(r.graph.size(), 1u);
  EXPECT_TRUE(r.graph.edges.empty());
}

TEST(CmsgType2, MergesExactMatch) {
  auto tsg = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kAttribute, "tall"}}, {{0, 1}});
  auto vsg = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kAttribute, "old"}}, {{0, 1}});
  auto r = cmsg_type2(tsg, vsg);
  EXPECT_EQ(r.graph.size(), 3u);
  EXPECT_EQ(r.merges, 1u);
  EXPECT_EQ(r.vsg_to_fused[0], 0u);
  EXPECT_EQ(to_plain_graph(r.graph).neighbors[0], (std::vector<std::size_t>{1, 2}));
}

TEST(CmsgType2, ManAndBoyStaySeparate) {
  auto tsg = make_graph({{NodeKind::kObject, "man"}}, {});
  auto vsg = make_graph({{NodeKind::kObject, "boy"}}, {});
  EXPECT_EQ(cmsg_type2(tsg, vsg).graph.size(), 2u);
}

TEST(CmsgType2, KindMatters) {
  auto tsg = make_graph({{NodeKind::kObject, "red"}}, {});
  auto vsg = make_graph({{NodeKind::kObject, "car"}, {NodeKind::kAttribute, "red"}}, {{0, 1}});
  EXPECT_EQ(cmsg_type2(tsg, vsg).merges, 0u);
}

TEST(CmsgType2, DuplicateEdgesCollapse) {
  auto g = speaker();
  auto r = cmsg_type2(g, g);
  EXPECT_EQ(r.graph.size(), g.size());
  EXPECT_EQ(r.graph.edges, g.edges);
}

TEST(CmsgType2, WithinGraphDuplicatesNotMerged) {
  auto tsg = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kObject, "man"}}, {});
  auto vsg = make_graph({{NodeKind::kObject, "man"}}, {});
  auto r = cmsg_type2(tsg, vsg);
  EXPECT_EQ(r.graph.size(), 2u);
  EXPECT_EQ(r.vsg_to_fused[0], 0u);
}

TEST(CmsgProperties, RandomInvariants) {
  sgmm::numkit::Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto tsg = random_graph(rng);
    const auto vsg = random_graph(rng, Modality::kVisual);

    auto t1 = cmsg_type1(tsg, vsg);
    EXPECT_EQ(t1.graph.size(), tsg.size() + vsg.size() + 1);
    EXPECT_EQ(t1.graph.edges.size(), tsg.edges.size() + vsg.edges.size() + tsg.size() + vsg.size());
    EXPECT_TRUE(validate_scene_graph(t1.graph).empty());

    auto t2 = cmsg_type2(tsg, vsg);
    EXPECT_EQ(t2.graph.size(), tsg.size() + vsg.size() - shared_keys(tsg, vsg));
    EXPECT_TRUE(validate_scene_graph(t2.graph).empty());
    EXPECT_EQ(t2.graph.modality, Modality::kFused);
    EXPECT_TRUE(std::is_sorted(t2.graph.edges.begin(), t2.graph.edges.end()));
  }
}

TEST(CmsgProperties, Type2Symmetric) {
  // Labels unique within each graph, so the labelled form pins the graph down
  // up to isomorphism.
  sgmm::numkit::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto dedupe = [](SceneGraph g) {
      std::set<std::string> seen;
      for (auto& n : g.nodes)
        if (!seen.insert(n.label).second) n.label += "#" + std::to_string(n.id);
      return g;
    };
    const auto a = dedupe(random_graph(rng));
    const auto b = dedupe(random_graph(rng, Modality::kVisual));
    EXPECT_EQ(labelled_form(cmsg_type2(a, b).graph), labelled_form(cmsg_type2(b, a).graph));
  }
}

namespace {

NodeFeaturizer table_featurizer(std::map<std::string, std::vector<double>> table) {
  return [table = std::move(table)](const Node& n) {
    auto it = table.find(n.label);
    return it == table.end() ? std::vector<double>{0.0, 0.0} : it->second;
  };
}

}  // namespace

TEST(CmsgType3, GreedyMatchingAndTies) {
  // t0 and t1 both tie with v0 at cosine 1; the lower tsg id wins.
  auto f = table_featurizer({{"a", {1, 0}}, {"b", {1, 0}}, {"c", {1, 0}}, {"d", {0, 1}}});
  auto tsg = make_graph({{NodeKind::kObject, "a"}, {NodeKind::kObject, "b"}}, {}, Modality::kText);
  auto vsg = make_graph({{NodeKind::kObject, "c"}, {NodeKind::kObject, "d"}}, {}, Modality::kVisual);
  auto r = cmsg_type3(tsg, vsg, f, 0.9);
  EXPECT_EQ(r.merges, 1u);
  EXPECT_EQ(r.vsg_to_fused[0], 0u);
  EXPECT_EQ(r.graph.nodes[0].label, "a");
  EXPECT_EQ(r.graph.size(), 3u);
}

TEST(CmsgType3, PrefersHigherSimilarity) {
  const double s = std::sqrt(0.5);
  auto f = table_featurizer({{"a", {1, 0}}, {"b", {s, s}}, {"c", {0.8, 0.6}}, {"d", {1, 0}}});
  auto tsg = make_graph({{NodeKind::kObject, "a"}, {NodeKind::kObject, "b"}}, {});
  auto vsg = make_graph({{NodeKind::kObject, "c"}, {NodeKind::kObject, "d"}}, {});
  auto r = cmsg_type3(tsg, vsg, f, 0.5);
  // a-d (1.0) first, then b-c (0.98995); a-c is blocked.
  EXPECT_EQ(r.merges, 2u);
  EXPECT_EQ(r.vsg_to_fused[1], 0u);
  EXPECT_EQ(r.vsg_to_fused[0], 1u);
}

TEST(CmsgType3, IdenticalLabelsAtThresholdOne) {
  auto f = table_featurizer({{"man", {0.3, 0.4}}, {"dog", {0.9, -0.1}}});
  auto tsg = make_graph({{NodeKind::kObject, "man"}, {NodeKind::kObject, "dog"}}, {});
  auto vsg = make_graph({{NodeKind::kObject, "dog"}}, {});
  auto r3 = cmsg_type3(tsg, vsg, f, 1.0 - 1e-12);
  auto r2 = cmsg_type2(tsg, vsg);
  EXPECT_EQ(r3.graph, r2.graph);
}

TEST(CmsgType3, ZeroNormSkippedWithWarning) {
  auto f = table_featurizer({{"man", {1, 0}}});
  auto tsg = make_graph({{NodeKind::kObject, "man"}}, {});
  auto vsg = make_graph({{NodeKind::kObject, "ghost"}}, {});
  auto r = cmsg_type3(tsg, vsg, f, 0.1);
  EXPECT_EQ(r.merges, 0u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("ghost"), std::string::npos);
}

TEST(CmsgType3, ThresholdAboveOneIsDisjointUnionAndMonotone) {
  sgmm::numkit::Rng rng(3);
  std::map<std::string, std::vector<double>> table;
  for (const auto& l : kLabels) table[l] = {rng.normal(), rng.normal(), rng.normal()};
  auto f = table_featurizer(table);
  for (int i = 0; i < 100; ++i) {
    const auto tsg = random_graph(rng);
    const auto vsg = random_graph(rng, Modality::kVisual);
    EXPECT_EQ(cmsg_type3(tsg, vsg, f, 1.5).graph, disjoint_union(tsg, vsg).graph);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double th = 0.05; th <= 1.0; th += 0.05) {
      auto r = cmsg_type3(tsg, vsg, f, th);
      EXPECT_LE(r.merges, prev);
      EXPECT_TRUE(validate_scene_graph(r.graph).empty());
      prev = r.merges;
    }
  }
}

TEST(CmsgSpec, Validation) {
  EXPECT_NO_THROW((CmsgSpec{CmsgVariant::kType1, std::nullopt}.validate()));
  EXPECT_NO_THROW((CmsgSpec{CmsgVariant::kType3, 1.0}.validate()));
  EXPECT_THROW((CmsgSpec{CmsgVariant::kType3, std::nullopt}.validate()), sgmm::ConfigError);
  EXPECT_THROW((CmsgSpec{CmsgVariant::kType3, 0.0}.validate()), sgmm::ConfigError);
  EXPECT_THROW((CmsgSpec{CmsgVariant::kType2, 0.5}.validate()), sgmm::ConfigError);
}
