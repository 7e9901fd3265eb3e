#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fcdlif/tensor.hpp"

namespace fcdlif::detail {

struct GradNode;

struct TensorImpl {
  Shape shape;
  std::vector<float> values;
  std::vector<float> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<GradNode> grad_fn;
};

struct GradNode {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // Receives d(loss)/d(output) and accumulates into the inputs' gradients.
  std::function<void(std::span<const float>)> backward;
  bool consumed = false;
};

// Adds `delta` into the gradient buffer of `t` if it tracks gradients.
void accumulate_grad(TensorImpl& t, std::span<const float> delta);
void accumulate_grad(TensorImpl& t, std::span<const double> delta);

// Grad buffer of `t`, allocated as zeros on first use.
std::vector<float>& grad_buffer(TensorImpl& t);

// Wraps freshly computed values as an operation output. When gradient mode is
// on and any input requires a gradient, the output records `backward`.
Tensor make_result(const char* op, Shape shape, std::vector<float> values,
                   std::vector<Tensor> inputs,
                   std::function<void(std::span<const float>)> backward);

// Throws NumericError if any value is NaN or infinite.
void check_finite(std::span<const float> values, const char* op);

}  // namespace fcdlif::detail
