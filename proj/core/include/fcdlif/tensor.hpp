#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fcdlif {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct TensorImpl;
}

// Row-major float32 array with optional reverse-mode gradient tracking.
//
// A Tensor is a shared handle: copies alias the same storage. Values are
// treated as immutable once the tensor has been used as an operation input;
// only leaf tensors (parameters) are updated in place, by optimizers and
// initializers, through mutable_values().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<float> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const float> values() const;
  std::span<float> mutable_values();
  float item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  void zero_grad();

  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

  // Internal handle used by the autograd engine and the operation kernels.
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Propagates d(loss)/d(t) into every tensor that requires a gradient and is
// reachable from `loss`. Leaf gradients accumulate across calls until
// zero_grad(); calling backward twice on the same graph throws GraphError.
void backward(const Tensor& loss);

// As above, and additionally warns about parameters the loss does not reach.
void backward(const Tensor& loss, std::span<const Tensor> parameters);

bool grad_enabled();

// Disables graph recording for the enclosing scope (inference, validation).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace fcdlif
