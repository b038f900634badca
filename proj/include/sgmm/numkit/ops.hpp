#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgmm/numkit/tensor.hpp"

namespace sgmm::numkit {

// Matrix product of [m x k] and [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise with broadcasting: shapes equal, one side a scalar, or one
// side's shape a suffix of the other's (row bias on a matrix).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// Identifies one dropout mask: (global seed, layer id, optimiser step,
// sample index within the batch).
struct DropoutKey {
  std::uint64_t seed = 0;
  std::uint64_t layer = 0;
  std::uint64_t step = 0;
  std::uint64_t sample = 0;
};

// Inverted dropout. Identity when !training or p == 0.
Tensor dropout(const Tensor& x, double p, const DropoutKey& key, bool training);

// Normalises the last axis to zero mean, unit variance; gamma/beta optional.
Tensor layer_norm(const Tensor& x, double eps);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor softmax(const Tensor& x, std::size_t axis);

// Mean over `axis`; the reduced axis is removed from the shape.
Tensor mean_pool(const Tensor& x, std::size_t axis = 0);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
// Rows of a [V x d] table; the result is [ids.size() x d].
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
// Row `r` of a matrix as a vector.
Tensor select_row(const Tensor& x, std::size_t r);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
// Concatenation of rank-1 tensors.
Tensor concat(const std::vector<Tensor>& parts);

// x @ w (+ b). x may be a vector [k] (result [n]) or a matrix [m x k].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b = {});

inline constexpr double kBceClamp = 1e-7;

// Binary cross-entropy of a probability against a {0, 1} label, with the
// probability clamped to [1e-7, 1 - 1e-7].
Tensor bce_loss(const Tensor& p, double label);

}  // namespace sgmm::numkit
