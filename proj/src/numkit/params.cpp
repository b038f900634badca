#include "sgmm/numkit/params.hpp"

#include <cmath>
#include <map>

#include "sgmm/error.hpp"

namespace sgmm::numkit {

std::vector<Tensor> tensors(const ParamList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

std::vector<NamedTensor> snapshot(const ParamList& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    out.push_back({p.name, p.tensor.shape(), {p.tensor.data().begin(), p.tensor.data().end()}});
  }
  return out;
}

void restore(ParamList& params, const std::vector<NamedTensor>& records) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& r : records) {
    if (!by_name.emplace(r.name, &r).second) throw StateError("checkpoint repeats \"" + r.name + "\"");
  }
  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw StateError("checkpoint lacks parameter \"" + p.name + "\"");
    if (it->second->shape != p.tensor.shape()) {
      throw StateError("checkpoint shape " + shape_str(it->second->shape) + " for \"" + p.name +
                       "\" does not match " + shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    std::copy(it->second->data.begin(), it->second->data.end(), dst.begin());
    by_name.erase(it);
  }
  if (!by_name.empty()) throw StateError("checkpoint has unknown parameter \"" + by_name.begin()->first + "\"");
}

Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace sgmm::numkit
