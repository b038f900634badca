#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sgmm::explain {

// Value of a coalition; coalition[i] is true when player i is present.
using Game = std::function<double(const std::vector<bool>& coalition)>;

inline constexpr std::size_t kMaxExactPlayers = 12;
// Up to this many players the permutation method visits all n! orders.
inline constexpr std::size_t kMaxEnumeratedPlayers = 5;
inline constexpr std::size_t kFallbackSamples = 2000;

struct ShapleyResult {
  std::vector<double> phi;
  std::vector<double> std_error;  // permutation method only
  double base_value = 0.0;      // f(empty)
  double full_value = 0.0;      // f(all)
  std::string method;           // "exact" or "permutation"
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  bool enumerated = false;  // every permutation visited
  std::vector<std::string> warnings;
};

// Coalition enumeration. More than 12 players fall back to the permutation
// method with kFallbackSamples samples and a warning.
ShapleyResult shapley_exact(const Game& game, std::size_t n_players, std::uint64_t fallback_seed = 1);

// Mean marginal contribution over random orders. With n <= 5 every one of
// the n! orders is visited once instead and n_samples is ignored.
// ConfigError when n_samples == 0.
ShapleyResult shapley_permutation(const Game& game, std::size_t n_players, std::size_t n_samples,
                                  std::uint64_t seed);

}  // namespace sgmm::explain
