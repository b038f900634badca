#include "sgmm/tem/encoder.hpp"

#include <cmath>
#include <numeric>

#include "sgmm/error.hpp"
#include "sgmm/numkit/ops.hpp"

namespace sgmm::tem {

using namespace numkit;

void TemConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("TEM: vocab_size must be positive");
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0 || max_len == 0 || patch_dim == 0) {
    throw ConfigError("TEM: dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("TEM: d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("TEM: dropout must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("TEM: layer_norm_eps must be positive");
}

EncoderLayer EncoderLayer::init(std::size_t d, std::size_t d_ff, Rng& rng) {
  EncoderLayer l;
  l.wq = init_uniform({d, d}, d, rng);
  l.bq = init_uniform({d}, d, rng);
  l.wk = init_uniform({d, d}, d, rng);
  l.bk = init_uniform({d}, d, rng);
  l.wv = init_uniform({d, d}, d, rng);
  l.bv = init_uniform({d}, d, rng);
  l.wo = init_uniform({d, d}, d, rng);
  l.bo = init_uniform({d}, d, rng);
  l.ln1_gamma = Tensor::full({d}, 1.0, true);
  l.ln1_beta = Tensor::zeros({d}, true);
  l.ff1_w = init_uniform({d, d_ff}, d, rng);
  l.ff1_b = init_uniform({d_ff}, d, rng);
  l.ff2_w = init_uniform({d_ff, d}, d_ff, rng);
  l.ff2_b = init_uniform({d}, d_ff, rng);
  l.ln2_gamma = Tensor::full({d}, 1.0, true);
  l.ln2_beta = Tensor::zeros({d}, true);
  return l;
}

void EncoderLayer::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".attn.wq", wq});
  out.push_back({prefix + ".attn.bq", bq});
  out.push_back({prefix + ".attn.wk", wk});
  out.push_back({prefix + ".attn.bk", bk});
  out.push_back({prefix + ".attn.wv", wv});
  out.push_back({prefix + ".attn.bv", bv});
  out.push_back({prefix + ".attn.wo", wo});
  out.push_back({prefix + ".attn.bo", bo});
  out.push_back({prefix + ".ln1.gamma", ln1_gamma});
  out.push_back({prefix + ".ln1.beta", ln1_beta});
  out.push_back({prefix + ".ffn.w1", ff1_w});
  out.push_back({prefix + ".ffn.b1", ff1_b});
  out.push_back({prefix + ".ffn.w2", ff2_w});
  out.push_back({prefix + ".ffn.b2", ff2_b});
  out.push_back({prefix + ".ln2.gamma", ln2_gamma});
  out.push_back({prefix + ".ln2.beta", ln2_beta});
}

TemParams TemParams::init(const TemConfig& config, Rng& rng) {
  config.validate();
  TemParams p;
  p.config = config;
  const std::size_t d = config.d_model;
  p.token_embedding = init_uniform({config.vocab_size, d}, d, rng);
  p.patch_projection = init_uniform({config.patch_dim, d}, config.patch_dim, rng);
  p.positional = init_uniform({config.max_len, d}, d, rng);
  p.modality = init_uniform({2, d}, d, rng);
  for (std::size_t i = 0; i < config.n_layers; ++i) p.layers.push_back(EncoderLayer::init(d, config.d_ff, rng));
  return p;
}

void TemParams::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".token_embedding", token_embedding});
  out.push_back({prefix + ".patch_projection", patch_projection});
  out.push_back({prefix + ".positional", positional});
  out.push_back({prefix + ".modality", modality});
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + ".layer" + std::to_string(i), out);
}

Tensor attention_heads(const Tensor& x, const EncoderLayer& layer, std::size_t n_heads,
                       std::vector<Tensor>* weights) {
  const std::size_t d = x.dim(1);
  const std::size_t dk = d / n_heads;
  const Tensor q = linear(x, layer.wq, layer.bq);
  const Tensor k = linear(x, layer.wk, layer.bk);
  const Tensor v = linear(x, layer.wv, layer.bv);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Tensor> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Tensor qh = slice_cols(q, h * dk, dk);
    const Tensor kh = slice_cols(k, h * dk, dk);
    const Tensor vh = slice_cols(v, h * dk, dk);
    const Tensor a = softmax(scale(matmul(qh, transpose(kh)), scale_factor), 1);
    if (weights) weights->push_back(a);
    heads.push_back(matmul(a, vh));
  }
  return n_heads == 1 ? heads[0] : concat_cols(heads);
}

Tensor multi_head_attention(const Tensor& x, const EncoderLayer& layer, std::size_t n_heads) {
  return linear(attention_heads(x, layer, n_heads), layer.wo, layer.bo);
}

Tensor encoder_layer_forward(const Tensor& x, const EncoderLayer& layer, const TemConfig& config,
                             std::size_t layer_index, const ForwardContext& ctx) {
  const double eps = config.layer_norm_eps;
  Tensor h = layer_norm(add(x, multi_head_attention(x, layer, config.n_heads)), layer.ln1_gamma,
                        layer.ln1_beta, eps);
  Tensor f = linear(relu(linear(h, layer.ff1_w, layer.ff1_b)), layer.ff2_w, layer.ff2_b);
  Tensor out = layer_norm(add(h, f), layer.ln2_gamma, layer.ln2_beta, eps);
  return dropout(out, config.dropout, {ctx.seed, layer_index, ctx.step, ctx.sample}, ctx.training);
}

Tensor embed_sequence(const TemInput& input, const TemParams& params, TemAblation ablation) {
  std::vector<Tensor> parts;
  if (ablation != TemAblation::kNoText && !input.token_ids.empty()) {
    for (auto id : input.token_ids) {
      if (id >= params.config.vocab_size) {
        throw InputError("token id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(params.config.vocab_size));
      }
    }
    parts.push_back(add(gather_rows(params.token_embedding, input.token_ids), select_row(params.modality, 0)));
  }
  if (ablation != TemAblation::kNoImage && input.patch_count() > 0) {
    if (input.patches.dim(1) != params.config.patch_dim) {
      throw ShapeError("patch vectors have length " + std::to_string(input.patches.dim(1)) + ", expected " +
                       std::to_string(params.config.patch_dim));
    }
    parts.push_back(add(matmul(input.patches, params.patch_projection), select_row(params.modality, 1)));
  }
  if (parts.empty()) throw InputError("TEM input sequence is empty");
  Tensor seq = parts.size() == 1 ? parts[0] : concat_rows(parts);
  const std::size_t n = seq.dim(0);
  if (n > params.config.max_len) {
    throw InputError("TEM sequence length " + std::to_string(n) + " exceeds max_len " +
                     std::to_string(params.config.max_len));
  }
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  return add(seq, gather_rows(params.positional, positions));
}

Tensor tem_forward(const TemInput& input, const TemParams& params, const ForwardContext& ctx,
                   TemAblation ablation) {
  Tensor x = embed_sequence(input, params, ablation);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    x = encoder_layer_forward(x, params.layers[i], params.config, i, ctx);
  }
  return mean_pool(x, 0);
}

}  // namespace sgmm::tem
