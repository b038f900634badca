#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sgmm/numkit/tensor.hpp"

namespace sgmm::numkit {

struct GradCheckResult {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Relative error with a floor on the denominator so entries whose true
// gradient is ~0 are judged on absolute agreement.
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Compares autodiff grads of `loss_fn` against central differences, one
// entry at a time, for every listed parameter. `loss_fn` must rebuild the
// graph from the current parameter values on each call.
std::vector<GradCheckResult> check_gradients(const std::function<Tensor()>& loss_fn,
                                             std::vector<Tensor> params,
                                             const std::vector<std::string>& names,
                                             double eps = 1e-5);

}  // namespace sgmm::numkit
