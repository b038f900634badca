#include "sgmm/explain/attribution.hpp"

#include "sgmm/error.hpp"
#include "sgmm/tem/text.hpp"

namespace sgmm::explain {

using numkit::Tensor;

std::string_view to_string(PlayerKind kind) {
  switch (kind) {
    case PlayerKind::kToken:
      return "token";
    case PlayerKind::kPatch:
      return "patch";
    case PlayerKind::kTsgNode:
      return "tsg_node";
    case PlayerKind::kVsgNode:
      return "vsg_node";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "exact") return Method::kExact;
  if (s == "permutation") return Method::kPermutation;
  throw ConfigError("unknown attribution method \"" + std::string(s) + "\"");
}

namespace {

std::vector<Player> patch_players(const tem::Image& image) {
  std::vector<Player> out;
  if (image.rgb.empty()) return out;
  const auto grid = tem::patchify(image);
  const std::size_t rows = grid.rows(), cols = grid.cols();
  if (grid.count() <= kMaxPatchPlayers) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t k = r * cols + c;
        out.push_back({PlayerKind::kPatch, k, std::to_string(r) + "," + std::to_string(c), {k}});
      }
    }
    return out;
  }
  const std::size_t mid_r = (rows + 1) / 2, mid_c = (cols + 1) / 2;
  for (std::size_t q = 0; q < 4; ++q) {
    Player p{PlayerKind::kPatch, out.size(), "q" + std::to_string(q), {}};
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t quad = (r >= mid_r ? 2 : 0) + (c >= mid_c ? 1 : 0);
        if (quad == q) p.members.push_back(r * cols + c);
      }
    }
    if (!p.members.empty()) out.push_back(std::move(p));
  }
  return out;
}

Tensor fresh_copy(const Tensor& t) {
  return Tensor::from(t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
}

void zero_rows(Tensor& t, const std::vector<std::size_t>& rows) {
  const std::size_t d = t.dim(1);
  auto data = t.mutable_data();
  for (std::size_t r : rows) std::fill(data.begin() + r * d, data.begin() + (r + 1) * d, 0.0);
}

}  // namespace

ExplainInput make_explain_input(const model::Example& example, const model::PrepareOptions& options) {
  ExplainInput in;
  in.prepared = model::prepare_example(example, options);
  const auto tokens = tem::tokenize(example.text);
  const std::size_t kept = in.prepared.tem.token_ids.size();
  for (std::size_t i = 0; i < kept; ++i) in.players.push_back({PlayerKind::kToken, i, tokens[i], {i}});
  for (auto& p : patch_players(example.image)) in.players.push_back(std::move(p));

  const bool fused = in.prepared.fusion != model::FusionVariant::kBase;
  auto add_nodes = [&](const scenegraph::SceneGraph& g, PlayerKind kind, const std::vector<std::size_t>& map) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      in.players.push_back({kind, i, g.nodes[i].label, {fused ? map[i] : i}});
    }
  };
  add_nodes(example.tsg, PlayerKind::kTsgNode, in.prepared.tsg_to_fused);
  add_nodes(example.vsg, PlayerKind::kVsgNode, in.prepared.vsg_to_fused);
  return in;
}

double value_function(const ExplainInput& input, const model::ModelParams& params,
                      const std::vector<bool>& coalition) {
  if (coalition.size() != input.players.size()) {
    throw ShapeError("value_function: coalition has " + std::to_string(coalition.size()) + " entries for " +
                     std::to_string(input.players.size()) + " players");
  }
  model::PreparedExample ex = input.prepared;
  const bool fused = ex.fusion != model::FusionVariant::kBase;
  std::vector<std::size_t> patch_rows, tsg_rows, vsg_rows;
  for (std::size_t i = 0; i < coalition.size(); ++i) {
    if (coalition[i]) continue;
    const Player& p = input.players[i];
    switch (p.kind) {
      case PlayerKind::kToken:
        ex.tem.token_ids[p.index] = tem::Vocabulary::kMask;
        break;
      case PlayerKind::kPatch:
        patch_rows.insert(patch_rows.end(), p.members.begin(), p.members.end());
        break;
      case PlayerKind::kTsgNode:
        tsg_rows.insert(tsg_rows.end(), p.members.begin(), p.members.end());
        break;
      case PlayerKind::kVsgNode:
        vsg_rows.insert(vsg_rows.end(), p.members.begin(), p.members.end());
        break;
    }
  }
  if (!patch_rows.empty()) {
    ex.tem.patches = fresh_copy(ex.tem.patches);
    zero_rows(ex.tem.patches, patch_rows);
  }
  if (fused) {
    tsg_rows.insert(tsg_rows.end(), vsg_rows.begin(), vsg_rows.end());
    if (!tsg_rows.empty()) {
      ex.fused.features = fresh_copy(ex.fused.features);
      zero_rows(ex.fused.features, tsg_rows);
    }
  } else {
    if (!tsg_rows.empty()) {
      ex.tsg.features = fresh_copy(ex.tsg.features);
      zero_rows(ex.tsg.features, tsg_rows);
    }
    if (!vsg_rows.empty()) {
      ex.vsg.features = fresh_copy(ex.vsg.features);
      zero_rows(ex.vsg.features, vsg_rows);
    }
  }
  return model::predict(ex, params).probability;
}

AttributionReport attribute(const ExplainInput& input, const model::ModelParams& params, Method method,
                            std::size_t n_samples, std::uint64_t seed) {
  const Game game = [&](const std::vector<bool>& c) { return value_function(input, params, c); };
  AttributionReport r;
  r.players = input.players;
  const std::size_t n = input.players.size();
  r.shapley = method == Method::kExact ? shapley_exact(game, n, seed) : shapley_permutation(game, n, n_samples, seed);
  return r;
}

}  // namespace sgmm::explain
