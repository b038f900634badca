#pragma once

#include <string>
#include <vector>

#include "sgmm/numkit/gradcheck.hpp"

namespace sgmm::harness {

struct GroupCheck {
  std::string group;  // e.g. "tem.layer0", "gsgm.tsg", "head"
  std::size_t entries = 0;
  double max_rel_error = 0.0;
};

struct GradientSuiteResult {
  std::vector<numkit::GradCheckResult> tensors;
  std::vector<GroupCheck> groups;
  double tolerance = 1e-4;

  bool passed() const;
};

// Parameter group of a dotted parameter name.
std::string parameter_group(const std::string& name);

// Central differences against autodiff for every parameter of the full
// model (dual-graph and dummy-node fusion) on a 2-token, 1-patch, 3-node
// instance, in training mode with dropout.
GradientSuiteResult run_gradient_suite(double eps = 1e-5, double tolerance = 1e-4);

}  // namespace sgmm::harness
