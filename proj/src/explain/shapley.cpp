#include "sgmm/explain/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sgmm/error.hpp"
#include "sgmm/numkit/random.hpp"

namespace sgmm::explain {

namespace {

std::vector<bool> from_mask(std::uint32_t mask, std::size_t n) {
  std::vector<bool> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = (mask >> i) & 1u;
  return c;
}

// Accumulates marginal contributions along one ordering.
void walk_order(const Game& game, const std::vector<std::size_t>& order, double base,
                std::vector<double>& sum, std::vector<double>& sum_sq) {
  std::vector<bool> coalition(order.size(), false);
  double prev = base;
  for (std::size_t i : order) {
    coalition[i] = true;
    const double v = game(coalition);
    const double delta = v - prev;
    sum[i] += delta;
    sum_sq[i] += delta * delta;
    prev = v;
  }
}

}  // namespace

ShapleyResult shapley_exact(const Game& game, std::size_t n, std::uint64_t fallback_seed) {
  if (n > kMaxExactPlayers) {
    auto r = shapley_permutation(game, n, kFallbackSamples, fallback_seed);
    r.warnings.push_back(std::to_string(n) + " players exceed the exact limit of " +
                         std::to_string(kMaxExactPlayers) + "; used " + std::to_string(kFallbackSamples) +
                         " sampled permutations");
    return r;
  }
  const std::uint32_t total = 1u << n;
  std::vector<double> value(total);
  for (std::uint32_t m = 0; m < total; ++m) value[m] = game(from_mask(m, n));

  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    double w = 1.0 / static_cast<double>(n);
    // 1 / (n * C(n-1, s))
    for (std::size_t k = 1; k <= s; ++k) w *= static_cast<double>(k) / static_cast<double>(n - k);
    weight[s] = w;
  }

  ShapleyResult r;
  r.method = "exact";
  r.phi.assign(n, 0.0);
  r.base_value = value[0];
  r.full_value = value[total - 1];
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t m = 0; m < total; ++m) {
      if (m & bit) continue;
      r.phi[i] += weight[std::popcount(m)] * (value[m | bit] - value[m]);
    }
  }
  return r;
}

ShapleyResult shapley_permutation(const Game& game, std::size_t n, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ConfigError("shapley_permutation: n_samples must be at least 1");
  ShapleyResult r;
  r.method = "permutation";
  r.seed = seed;
  r.base_value = game(std::vector<bool>(n, false));
  r.full_value = game(std::vector<bool>(n, true));
  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t count = 0;
  if (n <= kMaxEnumeratedPlayers) {
    r.enumerated = true;
    do {
      walk_order(game, order, r.base_value, sum, sum_sq);
      ++count;
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    numkit::Rng rng(seed);
    for (; count < n_samples; ++count) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      walk_order(game, order, r.base_value, sum, sum_sq);
    }
  }
  r.n_samples = count;

  const double c = static_cast<double>(count);
  r.phi.resize(n);
  r.std_error.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.phi[i] = sum[i] / c;
    if (r.enumerated || count < 2) {
      r.std_error[i] = 0.0;
    } else {
      const double var = std::max(0.0, (sum_sq[i] - c * r.phi[i] * r.phi[i]) / (c - 1.0));
      r.std_error[i] = std::sqrt(var / c);
    }
  }
  return r;
}

}  // namespace sgmm::explain
