#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgmm/explain/shapley.hpp"
#include "sgmm/model/model.hpp"

namespace sgmm::explain {

enum class PlayerKind { kToken, kPatch, kTsgNode, kVsgNode };

std::string_view to_string(PlayerKind kind);

// One maskable input unit. A patch player covers a single patch, or a
// quadrant of the grid when the image has more than 16 patches.
struct Player {
  PlayerKind kind = PlayerKind::kToken;
  std::size_t index = 0;             // position within its segment
  std::string text;                  // token, node label, or "row,col" / "q<k>"
  std::vector<std::size_t> members;  // rows masked together
};

inline constexpr std::size_t kMaxPatchPlayers = 16;

// A prepared example plus the human-readable side of each player.
struct ExplainInput {
  model::PreparedExample prepared;
  std::vector<Player> players;
};

// Players in order: tokens, patches, TSG nodes, VSG nodes. Ablations are
// not applied.
ExplainInput make_explain_input(const model::Example& example, const model::PrepareOptions& options);

// Model probability with absent players masked: tokens become [MASK],
// patches zero rows, graph nodes zero feature rows. Eval mode.
double value_function(const ExplainInput& input, const model::ModelParams& params,
                      const std::vector<bool>& coalition);

enum class Method { kExact, kPermutation };

Method parse_method(std::string_view s);

struct AttributionReport {
  std::vector<Player> players;
  ShapleyResult shapley;
};

AttributionReport attribute(const ExplainInput& input, const model::ModelParams& params, Method method,
                            std::size_t n_samples = 1000, std::uint64_t seed = 1);

}  // namespace sgmm::explain
