#pragma once

#include <cstdint>
#include <vector>

#include "sgmm/numkit/tensor.hpp"

namespace sgmm::numkit {

struct AdamConfig {
  double lr = 1e-5;
  double weight_decay = 1e-7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment buffers, one per parameter, in parameter order.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

AdamState make_adam_state(const std::vector<Tensor>& params, const AdamConfig& config);

// One bias-corrected Adam update using each parameter's accumulated grad.
// Weight decay enters as an extra gradient term weight_decay * theta.
// Parameters without a grad are treated as having a zero gradient.
void adam_step(std::vector<Tensor>& params, AdamState& state);

void zero_grads(std::vector<Tensor>& params);

}  // namespace sgmm::numkit
