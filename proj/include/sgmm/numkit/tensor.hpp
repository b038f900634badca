#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sgmm::numkit {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

namespace detail {

// One recorded value on the dynamic tape. Leaves have no backward function;
// interior nodes push their grad into their parents when visited.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const noexcept { return !backward; }
  // Grad buffer of a parent, allocated on first use. Only valid when the
  // parent requires grad.
  std::span<double> grad_buffer();
};

}  // namespace detail

// Dense row-major f64 array with reverse-mode differentiation. Copies share
// the underlying node, so a Tensor behaves like a handle.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  // Direct write access, for parameter initialisation and optimiser updates.
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double at(std::size_t i) const { return node_->data.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  bool is_leaf() const { return node_->is_leaf(); }

  // Copy of the values with no history.
  Tensor detach() const;
  // Same values, fresh leaf that tracks gradients.
  Tensor clone_parameter() const;

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Populates grads of every requires_grad tensor reachable from `loss`.
// Leaf grads accumulate across calls; interior grads are recomputed.
void backward(const Tensor& loss);

}  // namespace sgmm::numkit
