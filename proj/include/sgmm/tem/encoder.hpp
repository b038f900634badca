#pragma once

#include <cstdint>
#include <vector>

#include "sgmm/numkit/params.hpp"
#include "sgmm/numkit/tensor.hpp"

namespace sgmm::tem {

using numkit::Tensor;

struct TemConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 128;
  std::size_t max_len = 128;
  std::size_t patch_dim = 768;
  double dropout = 0.3;
  double layer_norm_eps = 1e-5;

  // ConfigError on zero sizes, d_model not divisible by n_heads, or a
  // dropout outside [0, 1).
  void validate() const;
};

struct EncoderLayer {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln1_gamma, ln1_beta;
  Tensor ff1_w, ff1_b, ff2_w, ff2_b;
  Tensor ln2_gamma, ln2_beta;

  static EncoderLayer init(std::size_t d_model, std::size_t d_ff, numkit::Rng& rng);
  void collect(const std::string& prefix, numkit::ParamList& out) const;
};

struct TemParams {
  TemConfig config;
  Tensor token_embedding;  // [vocab x d]
  Tensor patch_projection; // [patch_dim x d]
  Tensor positional;       // [max_len x d]
  Tensor modality;         // [2 x d]: row 0 text, row 1 image
  std::vector<EncoderLayer> layers;

  static TemParams init(const TemConfig& config, numkit::Rng& rng);
  void collect(const std::string& prefix, numkit::ParamList& out) const;
};

// Where dropout masks come from: training flag plus the counter key parts.
struct ForwardContext {
  bool training = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t sample = 0;
};

enum class TemAblation { kNone, kNoText, kNoImage };

struct TemInput {
  std::vector<std::size_t> token_ids;
  Tensor patches;  // [n x patch_dim], or undefined for no patches
  std::size_t patch_count() const { return patches.defined() ? patches.dim(0) : 0; }
};

// Concatenated head outputs before the output projection, [n x d]. When
// `weights` is given it receives one [n x n] attention matrix per head.
Tensor attention_heads(const Tensor& x, const EncoderLayer& layer, std::size_t n_heads,
                       std::vector<Tensor>* weights = nullptr);

Tensor multi_head_attention(const Tensor& x, const EncoderLayer& layer, std::size_t n_heads);

// attention -> add&norm -> FFN -> add&norm -> dropout.
Tensor encoder_layer_forward(const Tensor& x, const EncoderLayer& layer, const TemConfig& config,
                             std::size_t layer_index, const ForwardContext& ctx);

// Token rows then patch rows, each with positional and modality embeddings.
Tensor embed_sequence(const TemInput& input, const TemParams& params, TemAblation ablation);

// E_encoder, [d_model]. InputError when the sequence is empty or longer
// than max_len.
Tensor tem_forward(const TemInput& input, const TemParams& params, const ForwardContext& ctx,
                   TemAblation ablation = TemAblation::kNone);

}  // namespace sgmm::tem
