#include "fcdlif/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "autograd.hpp"
#include "fcdlif/error.hpp"
#include "fcdlif/log.hpp"

namespace fcdlif {
namespace {

thread_local bool t_grad_enabled = true;

detail::TensorImpl& checked(const std::shared_ptr<detail::TensorImpl>& impl) {
  if (!impl) throw Error("use of an undefined tensor");
  return *impl;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<float> values, bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " needs " + std::to_string(shape_numel(shape)) +
                         " values, got " + std::to_string(values.size()));
  }
  detail::check_finite(values, "tensor construction");
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value), requires_grad);
}

const Shape& Tensor::shape() const { return checked(impl_).shape; }

std::size_t Tensor::size(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(impl_).values.size(); }

std::span<const float> Tensor::values() const { return checked(impl_).values; }

std::span<float> Tensor::mutable_values() {
  auto& impl = checked(impl_);
  if (impl.grad_fn) throw GraphError("only leaf tensors may be modified in place");
  return impl.values;
}

float Tensor::item() const {
  const auto& impl = checked(impl_);
  if (impl.values.size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(impl.shape));
  return impl.values[0];
}

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }
bool Tensor::is_leaf() const { return checked(impl_).grad_fn == nullptr; }
bool Tensor::has_grad() const { return !checked(impl_).grad.empty(); }
std::span<const float> Tensor::grad() const { return checked(impl_).grad; }
std::span<float> Tensor::mutable_grad() { return detail::grad_buffer(checked(impl_)); }

void Tensor::zero_grad() {
  auto& g = checked(impl_).grad;
  std::fill(g.begin(), g.end(), 0.0f);
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace detail {

std::vector<float>& grad_buffer(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.values.size(), 0.0f);
  return t.grad;
}

void accumulate_grad(TensorImpl& t, std::span<const float> delta) {
  if (!t.requires_grad) return;
  auto& g = grad_buffer(t);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void accumulate_grad(TensorImpl& t, std::span<const double> delta) {
  if (!t.requires_grad) return;
  auto& g = grad_buffer(t);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(g[i] + delta[i]);
}

Tensor make_result(const char* op, Shape shape, std::vector<float> values, std::vector<Tensor> inputs,
                   std::function<void(std::span<const float>)> backward) {
  check_finite(values, op);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  bool track = false;
  if (t_grad_enabled) {
    for (const auto& in : inputs) track = track || in.requires_grad();
  }
  if (track) {
    impl->requires_grad = true;
    auto node = std::make_shared<GradNode>();
    node->op = op;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.impl());
    node->backward = std::move(backward);
    impl->grad_fn = std::move(node);
  }
  return Tensor(std::move(impl));
}

void check_finite(std::span<const float> values, const char* op) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string(op) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

}  // namespace detail

namespace {

std::vector<detail::TensorImpl*> topological_order(detail::TensorImpl* root) {
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  // Iterative post-order DFS; deep graphs (42 frames x many layers) would
  // overflow a recursive walk in debug builds.
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& fn = node->grad_fn;
    if (fn && next < fn->inputs.size()) {
      auto* child = fn->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  return order;  // inputs before outputs
}

std::unordered_set<const detail::TensorImpl*> run_backward(const Tensor& loss) {
  auto& root = checked(loss.impl());
  if (root.values.size() != 1) {
    throw GraphError("backward requires a scalar loss, got shape " + shape_string(root.shape));
  }
  if (!root.requires_grad) throw GraphError("loss does not depend on any tensor that requires a gradient");
  if (root.grad_fn && root.grad_fn->consumed) {
    throw GraphError("backward called twice on the same graph; rebuild the forward pass");
  }

  const auto order = topological_order(&root);
  grad_buffer(root).assign(1, 1.0f);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* t = *it;
    if (!t->grad_fn) continue;
    if (t->grad.empty()) t->grad.assign(t->values.size(), 0.0f);
    t->grad_fn->backward(t->grad);
    t->grad_fn->consumed = true;
    // Intermediate gradients are no longer needed once propagated.
    std::vector<float>().swap(t->grad);
  }
  std::unordered_set<const detail::TensorImpl*> leaves;
  for (auto* t : order) {
    if (!t->grad_fn) {
      detail::check_finite(t->grad, "backward");
      leaves.insert(t);
    }
  }
  return leaves;
}

}  // namespace

void backward(const Tensor& loss) { run_backward(loss); }

void backward(const Tensor& loss, std::span<const Tensor> parameters) {
  const auto reached = run_backward(loss);
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    if (!reached.contains(parameters[i].impl().get())) {
      log::warning("parameter #" + std::to_string(i) + " of shape " + shape_string(parameters[i].shape()) +
                   " is not reachable from the loss; its gradient stays zero");
      detail::grad_buffer(*parameters[i].impl());
    }
  }
}

}  // namespace fcdlif
