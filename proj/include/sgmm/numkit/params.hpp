#pragma once

#include <string>
#include <vector>

#include "sgmm/numkit/checkpoint.hpp"
#include "sgmm/numkit/random.hpp"
#include "sgmm/numkit/tensor.hpp"

namespace sgmm::numkit {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

std::vector<Tensor> tensors(const ParamList& params);

// Values of every parameter, in list order.
std::vector<NamedTensor> snapshot(const ParamList& params);

// Copies checkpoint values into existing parameters. Every parameter must be
// present with a matching shape and every record must name a parameter;
// otherwise throws StateError.
void restore(ParamList& params, const std::vector<NamedTensor>& records);

// Trainable tensor drawn from uniform(-sqrt(1/fan_in), sqrt(1/fan_in)).
Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace sgmm::numkit
