#include "sgmm/numkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sgmm/error.hpp"

namespace sgmm::numkit {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<GradCheckResult> check_gradients(const std::function<Tensor()>& loss_fn,
                                             std::vector<Tensor> params,
                                             const std::vector<std::string>& names,
                                             double eps) {
  if (names.size() != params.size()) throw ConfigError("check_gradients: one name per parameter");
  for (auto& p : params) p.zero_grad();
  backward(loss_fn());

  std::vector<GradCheckResult> results;
  for (std::size_t i = 0; i < params.size(); ++i) {
    GradCheckResult r;
    r.name = names[i];
    r.entries = params[i].numel();
    const std::vector<double> analytic = params[i].has_grad()
                                             ? std::vector<double>(params[i].grad().begin(),
                                                                   params[i].grad().end())
                                             : std::vector<double>(params[i].numel(), 0.0);
    auto values = params[i].mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double up = loss_fn().item();
      values[j] = saved - eps;
      const double down = loss_fn().item();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[j], numeric));
      r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic[j] - numeric));
    }
    results.push_back(r);
  }
  for (auto& p : params) p.zero_grad();
  return results;
}

}  // namespace sgmm::numkit
