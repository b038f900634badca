#include "sgmm/embeddings/node2vec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sgmm/error.hpp"
#include "sgmm/numkit/random.hpp"

namespace sgmm::embeddings {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool adjacent(const scenegraph::PlainGraph& g, std::size_t a, std::size_t b) {
  const auto& nb = g.neighbors[a];
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::size_t sample(const std::vector<double>& cumulative, numkit::Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

}  // namespace

void Node2VecConfig::validate() const {
  if (!(p > 0.0)) throw ConfigError("node2vec: p must be positive");
  if (!(q > 0.0)) throw ConfigError("node2vec: q must be positive");
  if (walk_length < 2) throw ConfigError("node2vec: walk_length must be at least 2");
  if (embedding_dim < 1) throw ConfigError("node2vec: embedding_dim must be at least 1");
}

std::vector<double> transition_probabilities(const scenegraph::PlainGraph& g,
                                             std::optional<std::size_t> prev, std::size_t cur,
                                             double p, double q) {
  const auto& nb = g.neighbors.at(cur);
  std::vector<double> w(nb.size(), 1.0);
  if (prev) {
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] == *prev) {
        w[i] = 1.0 / p;
      } else if (!adjacent(g, *prev, nb[i])) {
        w[i] = 1.0 / q;
      }
    }
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (auto& x : w) x /= total;
  return w;
}

std::vector<Walk> node2vec_walks(const scenegraph::PlainGraph& g, const Node2VecConfig& config) {
  config.validate();
  if (g.size() == 0) throw EmptyInputError("node2vec: graph has no nodes");
  std::vector<Walk> walks;
  walks.reserve(g.size() * config.walks_per_node);
  std::vector<double> cumulative;
  for (std::size_t w = 0; w < config.walks_per_node; ++w) {
    for (std::size_t start = 0; start < g.size(); ++start) {
      numkit::Rng rng(numkit::hash_key({config.seed, start, w}));
      Walk walk{start};
      while (walk.size() < config.walk_length) {
        const std::size_t cur = walk.back();
        if (g.neighbors[cur].empty()) break;
        std::optional<std::size_t> prev;
        if (walk.size() >= 2) prev = walk[walk.size() - 2];
        const auto probs = transition_probabilities(g, prev, cur, config.p, config.q);
        cumulative.resize(probs.size());
        std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
        walk.push_back(g.neighbors[cur][sample(cumulative, rng)]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

void sgns_gradient(std::span<const double> center, std::span<const double> context,
                   const std::vector<std::span<const double>>& negatives, SgnsGradient& out) {
  const std::size_t d = center.size();
  out.center.assign(d, 0.0);
  out.context.assign(d, 0.0);
  out.negatives.resize(negatives.size());

  const double s_pos = dot(context, center);
  out.loss = -log_sigmoid(s_pos);
  const double g_pos = sigmoid(s_pos) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    out.center[i] += g_pos * context[i];
    out.context[i] = g_pos * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double s = dot(negatives[k], center);
    out.loss -= log_sigmoid(-s);
    const double g = sigmoid(s);
    out.negatives[k].resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      out.center[i] += g * negatives[k][i];
      out.negatives[k][i] = g * center[i];
    }
  }
}

std::vector<std::vector<double>> skipgram_train(const std::vector<Walk>& walks, std::size_t num_nodes,
                                                const Node2VecConfig& config) {
  config.validate();
  const std::size_t d = config.embedding_dim;
  numkit::Rng rng(numkit::hash_key({config.seed, 0x5c1b6a3ULL}));

  std::vector<std::vector<double>> in(num_nodes, std::vector<double>(d));
  std::vector<std::vector<double>> out(num_nodes, std::vector<double>(d, 0.0));
  for (auto& row : in)
    for (auto& x : row) x = rng.uniform(-0.5, 0.5) / static_cast<double>(d);

  std::vector<double> freq(num_nodes, 0.0);
  for (const auto& w : walks)
    for (auto n : w) freq.at(n) += 1.0;
  std::vector<double> cumulative(num_nodes);
  double acc = 0.0;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    acc += std::pow(freq[i], 0.75);
    cumulative[i] = acc;
  }

  std::size_t pairs_per_epoch = 0;
  for (const auto& w : walks) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::size_t lo = i >= config.window ? i - config.window : 0;
      const std::size_t hi = std::min(w.size() - 1, i + config.window);
      pairs_per_epoch += hi - lo;
    }
  }
  const double total = static_cast<double>(pairs_per_epoch * config.epochs);

  std::vector<std::size_t> order(walks.size());
  SgnsGradient grad;
  std::vector<std::size_t> neg_ids;
  std::vector<std::span<const double>> neg_rows;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs && acc > 0.0; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (auto wi : order) {
      const auto& w = walks[wi];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(w.size() - 1, i + config.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::size_t c = w[i], o = w[j];
          const double lr =
              config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(step++) / total);
          neg_ids.clear();
          neg_rows.clear();
          for (std::size_t k = 0; k < config.negative_samples; ++k) {
            const std::size_t n = sample(cumulative, rng);
            if (n == o) continue;
            neg_ids.push_back(n);
            neg_rows.push_back(out[n]);
          }
          sgns_gradient(in[c], out[o], neg_rows, grad);
          for (std::size_t t = 0; t < d; ++t) {
            in[c][t] -= lr * grad.center[t];
            out[o][t] -= lr * grad.context[t];
          }
          for (std::size_t k = 0; k < neg_ids.size(); ++k)
            for (std::size_t t = 0; t < d; ++t) out[neg_ids[k]][t] -= lr * grad.negatives[k][t];
        }
      }
    }
  }

  for (auto& row : in) {
    double norm = 0.0;
    for (double x : row) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      row[0] = 1.0;
      continue;
    }
    for (auto& x : row) x /= norm;
  }
  return in;
}

std::vector<std::vector<double>> node2vec_embed(const scenegraph::PlainGraph& g,
                                                const Node2VecConfig& config) {
  return skipgram_train(node2vec_walks(g, config), g.size(), config);
}

}  // namespace sgmm::embeddings
