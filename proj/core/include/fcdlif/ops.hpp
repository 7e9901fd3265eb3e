#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "fcdlif/tensor.hpp"

// Differentiable layer primitives. Convolutions use the cross-correlation
// convention (no kernel flip) and zero padding. Reductions accumulate in
// double precision and store float32 results.
namespace fcdlif::ops {

using Index3 = std::array<std::size_t, 3>;

struct Conv3dOptions {
  Index3 stride{1, 1, 1};
  Index3 padding{0, 0, 0};
};

// input [C_in,D,H,W], kernel [C_out,C_in,kd,kh,kw], bias [C_out] or undefined.
Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Conv3dOptions& options = {});

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  // Stride 1 with padding (k-1)/2 so the output length equals the input
  // length. Requires an odd kernel.
  bool same = false;
};

// input [C_in,T], kernel [C_out,C_in,k], bias [C_out] or undefined.
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Conv1dOptions& options = {});

// Gradient flows to the first (lowest linear index) maximum of each window.
Tensor maxpool3d(const Tensor& input, Index3 window, Index3 stride);

// [C,D,H,W] -> [C], mean over all spatial cells.
Tensor adaptive_avg_pool(const Tensor& input);

Tensor relu(const Tensor& input);

// Per-channel normalisation over all trailing axes of a [C,...] tensor,
// followed by the affine map scale[c]*x + shift[c].
Tensor instance_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, double epsilon = 1e-5);

Tensor residual_add(const Tensor& a, const Tensor& b);

// T tensors of E elements each -> [E,T]; column t is columns[t].
Tensor stack_columns(std::span<const Tensor> columns);

// x [N], weight [M,N], bias [M] -> [M].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor reshape(const Tensor& input, Shape shape);

Tensor sum(const Tensor& input);
Tensor square(const Tensor& input);

// (1/T) * sum_t weights[t] * (pred[t] - target[t])^2 as a scalar tensor.
Tensor weighted_mse(const Tensor& prediction, std::span<const double> target, std::span<const double> weights);

}  // namespace fcdlif::ops
