#include "sgmm/model/example.hpp"

#include "sgmm/error.hpp"

namespace sgmm::model {

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw FieldError("split must be \"train\" or \"test\", got \"" + std::string(s) + "\"");
}

std::string_view to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::kBase:
      return "base";
    case FusionVariant::kCmsg1:
      return "cmsg1";
    case FusionVariant::kCmsg2:
      return "cmsg2";
    case FusionVariant::kCmsg3:
      return "cmsg3";
  }
  return "?";
}

FusionVariant parse_fusion(std::string_view s) {
  if (s == "base") return FusionVariant::kBase;
  if (s == "cmsg1") return FusionVariant::kCmsg1;
  if (s == "cmsg2") return FusionVariant::kCmsg2;
  if (s == "cmsg3") return FusionVariant::kCmsg3;
  throw ConfigError("unknown fusion variant \"" + std::string(s) + "\"");
}

std::string Ablation::name() const {
  std::string out;
  auto add = [&](bool on, const char* flag) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += flag;
  };
  add(no_text, "no_text");
  add(no_image, "no_image");
  add(no_tsg, "no_tsg");
  add(no_vsg, "no_vsg");
  return out.empty() ? "full" : out;
}

void Ablation::validate() const {
  if (no_text && no_image && no_tsg && no_vsg) throw ConfigError("ablation removes every input; no signal remains");
}

Ablation parse_ablation(std::string_view s) {
  Ablation a;
  if (s.empty() || s == "full" || s == "none") return a;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t end = s.find('+', pos);
    if (end == std::string_view::npos) end = s.size();
    const auto flag = s.substr(pos, end - pos);
    if (flag == "no_text") {
      a.no_text = true;
    } else if (flag == "no_image") {
      a.no_image = true;
    } else if (flag == "no_tsg") {
      a.no_tsg = true;
    } else if (flag == "no_vsg") {
      a.no_vsg = true;
    } else {
      throw ConfigError("unknown ablation flag \"" + std::string(flag) + "\"");
    }
    pos = end + 1;
  }
  a.validate();
  return a;
}

std::size_t node_feature_dim(const PrepareOptions& options) {
  const std::size_t glove = options.words ? options.words->dim() : 0;
  switch (options.feature_mode) {
    case embeddings::FeatureMode::kGlove:
      return glove;
    case embeddings::FeatureMode::kN2v:
      return options.node2vec.embedding_dim;
    case embeddings::FeatureMode::kConcat:
      return glove + options.node2vec.embedding_dim;
  }
  return glove;
}

numkit::Tensor node_features(const scenegraph::SceneGraph& g, const PrepareOptions& options) {
  if (g.empty()) return {};
  if (!options.words && options.feature_mode != embeddings::FeatureMode::kN2v) {
    throw ConfigError("node features need a word-vector table");
  }
  std::vector<std::vector<double>> n2v;
  if (options.feature_mode != embeddings::FeatureMode::kGlove) {
    n2v = embeddings::node2vec_embed(scenegraph::to_plain_graph(g), options.node2vec);
  }
  const std::size_t d = node_feature_dim(options);
  std::vector<double> flat;
  flat.reserve(g.size() * d);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> glove;
    if (options.feature_mode != embeddings::FeatureMode::kN2v) {
      glove = embeddings::featurize_node(g.nodes[i], *options.words, options.feature_seed);
    }
    const auto row = embeddings::combine_features(glove, n2v.empty() ? std::vector<double>{} : n2v[i],
                                                  options.feature_mode);
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return numkit::Tensor::from({g.size(), d}, std::move(flat));
}

PreparedExample prepare_example(const Example& example, const PrepareOptions& options) {
  if (!options.vocab) throw ConfigError("prepare_example needs a vocabulary");
  PreparedExample out;
  out.id = example.id;
  out.label = example.label;
  out.fusion = options.fusion;

  if (!example.image.rgb.empty()) out.tem.patches = tem::patchify(example.image).tensor();
  const std::size_t patches = out.tem.patch_count();
  if (patches > options.max_len) {
    throw InputError("example " + example.id + ": " + std::to_string(patches) + " patches exceed max_len");
  }
  out.tem.token_ids = options.vocab->encode(tem::tokenize(example.text));
  if (out.tem.token_ids.size() + patches > options.max_len) out.tem.token_ids.resize(options.max_len - patches);

  auto graph_input = [&](const scenegraph::SceneGraph& g) {
    return gsgm::make_graph_input(scenegraph::to_plain_graph(g), node_features(g, options));
  };

  if (options.fusion == FusionVariant::kBase) {
    out.tsg = graph_input(example.tsg);
    out.vsg = graph_input(example.vsg);
    return out;
  }

  scenegraph::CmsgResult fused;
  switch (options.fusion) {
    case FusionVariant::kCmsg1:
      fused = scenegraph::cmsg_type1(example.tsg, example.vsg);
      break;
    case FusionVariant::kCmsg2:
      fused = scenegraph::cmsg_type2(example.tsg, example.vsg);
      break;
    case FusionVariant::kCmsg3: {
      scenegraph::CmsgSpec{scenegraph::CmsgVariant::kType3, options.cmsg_threshold}.validate();
      if (!options.words) throw ConfigError("CMSG Type 3 needs a word-vector table");
      fused = scenegraph::cmsg_type3(example.tsg, example.vsg,
                                     embeddings::make_featurizer(*options.words, options.feature_seed),
                                     *options.cmsg_threshold);
      break;
    }
    case FusionVariant::kBase:
      break;
  }
  out.fused = graph_input(fused.graph);
  out.dummy = fused.graph.dummy;
  out.tsg_to_fused = std::move(fused.tsg_to_fused);
  out.vsg_to_fused = std::move(fused.vsg_to_fused);
  return out;
}

PreparedExample apply_ablation(PreparedExample example, const Ablation& ablation) {
  ablation.validate();
  if (ablation.no_text) example.tem.token_ids.clear();
  if (ablation.no_image) example.tem.patches = {};
  if ((ablation.no_tsg || ablation.no_vsg) && example.fusion != FusionVariant::kBase) {
    throw ConfigError("no_tsg / no_vsg ablations apply to the dual-graph model only");
  }
  example.graph_mask.no_tsg = example.graph_mask.no_tsg || ablation.no_tsg;
  example.graph_mask.no_vsg = example.graph_mask.no_vsg || ablation.no_vsg;
  return example;
}

}  // namespace sgmm::model
