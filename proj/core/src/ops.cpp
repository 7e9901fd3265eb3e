#include "fcdlif/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "autograd.hpp"
#include "fcdlif/error.hpp"

namespace fcdlif::ops {
namespace {

using detail::make_result;
using std::ptrdiff_t;

constexpr const char* kAxisNames[] = {"depth", "height", "width"};

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.dim() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}


// Eight independent partial sums so the compiler can vectorize the reduction.
double dot(const float* a, const float* b, ptrdiff_t n) {
  float lanes[8] = {};
  ptrdiff_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
  }
  double total = 0.0;
  for (float v : lanes) total += v;
  for (; i < n; ++i) total += static_cast<double>(a[i]) * b[i];
  return total;
}

// Output positions o in [lo, hi] whose input index o*stride + k - pad lies in [0, extent).
struct Range {
  ptrdiff_t lo, hi;
  bool empty() const { return lo > hi; }
};

Range valid_range(ptrdiff_t out_extent, ptrdiff_t in_extent, ptrdiff_t stride, ptrdiff_t k, ptrdiff_t pad) {
  ptrdiff_t lo = 0;
  if (pad > k) lo = (pad - k + stride - 1) / stride;
  ptrdiff_t hi_num = in_extent - 1 + pad - k;
  ptrdiff_t hi = hi_num < 0 ? -1 : std::min(out_extent - 1, hi_num / stride);
  return {lo, hi};
}

// Spatial geometry shared by conv3d forward and backward.
struct Conv3dGeometry {
  ptrdiff_t c_in, d, h, w;
  ptrdiff_t c_out, kd, kh, kw;
  ptrdiff_t od, oh, ow;
  ptrdiff_t sd, sh, sw;
  ptrdiff_t pd, ph, pw;

  // Calls body(in_offset, out_offset, count) for each contiguous
  // output row segment touched by kernel tap (a, b, c) of input channel ci.
  template <typename Body>
  void for_each_row(ptrdiff_t a, ptrdiff_t b, ptrdiff_t c, Body&& body) const {
    const Range rd = valid_range(od, d, sd, a, pd);
    const Range rh = valid_range(oh, h, sh, b, ph);
    const Range rw = valid_range(ow, w, sw, c, pw);
    if (rd.empty() || rh.empty() || rw.empty()) return;
    const ptrdiff_t count = rw.hi - rw.lo + 1;
    for (ptrdiff_t z = rd.lo; z <= rd.hi; ++z) {
      const ptrdiff_t iz = z * sd + a - pd;
      for (ptrdiff_t y = rh.lo; y <= rh.hi; ++y) {
        const ptrdiff_t iy = y * sh + b - ph;
        const ptrdiff_t ix = rw.lo * sw + c - pw;
        body((iz * h + iy) * w + ix, (z * oh + y) * ow + rw.lo, count);
      }
    }
  }

  // Row (ci, a, b, c) holds the input value each output position reads
  // through that tap; padding reads as zero.
  std::vector<float> im2col(std::span<const float> x) const {
    const ptrdiff_t in_plane = d * h * w;
    const ptrdiff_t out_plane = od * oh * ow;
    std::vector<float> col(static_cast<std::size_t>(c_in * kd * kh * kw * out_plane), 0.0f);
    float* row = col.data();
    for (ptrdiff_t ci = 0; ci < c_in; ++ci)
      for (ptrdiff_t a = 0; a < kd; ++a)
        for (ptrdiff_t b = 0; b < kh; ++b)
          for (ptrdiff_t c = 0; c < kw; ++c, row += out_plane) {
            const float* xin = x.data() + ci * in_plane;
            for_each_row(a, b, c, [&](ptrdiff_t in_off, ptrdiff_t out_off, ptrdiff_t count) {
              for (ptrdiff_t i = 0; i < count; ++i) row[out_off + i] = xin[in_off + i * sw];
            });
          }
    return col;
  }

  // Adjoint of im2col.
  std::vector<double> col2im(std::span<const float> col) const {
    const ptrdiff_t in_plane = d * h * w;
    const ptrdiff_t out_plane = od * oh * ow;
    std::vector<double> x(static_cast<std::size_t>(c_in * in_plane), 0.0);
    const float* row = col.data();
    for (ptrdiff_t ci = 0; ci < c_in; ++ci)
      for (ptrdiff_t a = 0; a < kd; ++a)
        for (ptrdiff_t b = 0; b < kh; ++b)
          for (ptrdiff_t c = 0; c < kw; ++c, row += out_plane) {
            double* xin = x.data() + ci * in_plane;
            for_each_row(a, b, c, [&](ptrdiff_t in_off, ptrdiff_t out_off, ptrdiff_t count) {
              for (ptrdiff_t i = 0; i < count; ++i) xin[in_off + i * sw] += row[out_off + i];
            });
          }
    return x;
  }
};

}  // namespace

Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Conv3dOptions& options) {
  require_rank(input, 4, "conv3d", "input");
  require_rank(kernel, 5, "conv3d", "kernel");
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  if (ks[1] != is[0]) {
    throw DimensionError("conv3d: channel axis mismatch, kernel expects " + std::to_string(ks[1]) +
                         " input channels but input has " + std::to_string(is[0]));
  }
  if (bias.defined() && (bias.dim() != 1 || bias.size(0) != ks[0])) {
    throw DimensionError("conv3d: bias must have shape [" + std::to_string(ks[0]) + "], got " +
                         shape_string(bias.shape()));
  }
  std::array<ptrdiff_t, 3> out{};
  for (int axis = 0; axis < 3; ++axis) {
    if (options.stride[axis] < 1) throw ConfigError(std::string("conv3d: stride along ") + kAxisNames[axis] + " must be >= 1");
    const auto padded = is[axis + 1] + 2 * options.padding[axis];
    if (ks[axis + 2] > padded) {
      throw DimensionError(std::string("conv3d: kernel extent ") + std::to_string(ks[axis + 2]) + " exceeds padded " +
                           kAxisNames[axis] + " extent " + std::to_string(padded));
    }
    out[axis] = static_cast<ptrdiff_t>((padded - ks[axis + 2]) / options.stride[axis] + 1);
  }

  const Conv3dGeometry g{static_cast<ptrdiff_t>(is[0]), static_cast<ptrdiff_t>(is[1]), static_cast<ptrdiff_t>(is[2]),
                         static_cast<ptrdiff_t>(is[3]), static_cast<ptrdiff_t>(ks[0]), static_cast<ptrdiff_t>(ks[2]),
                         static_cast<ptrdiff_t>(ks[3]), static_cast<ptrdiff_t>(ks[4]), out[0], out[1], out[2],
                         static_cast<ptrdiff_t>(options.stride[0]), static_cast<ptrdiff_t>(options.stride[1]),
                         static_cast<ptrdiff_t>(options.stride[2]), static_cast<ptrdiff_t>(options.padding[0]),
                         static_cast<ptrdiff_t>(options.padding[1]), static_cast<ptrdiff_t>(options.padding[2])};
  const ptrdiff_t out_plane = g.od * g.oh * g.ow;
  const ptrdiff_t rows = g.c_in * g.kd * g.kh * g.kw;

  const auto k = kernel.values();
  const auto col = g.im2col(input.values());
  std::vector<float> result(static_cast<std::size_t>(g.c_out * out_plane));
  for (ptrdiff_t co = 0; co < g.c_out; ++co) {
    float* dst = result.data() + co * out_plane;
    std::fill(dst, dst + out_plane, bias.defined() ? bias.values()[co] : 0.0f);
  }
  // result[Co, N] += kernel[Co, rows] * col[rows, N], four output channels at a time.
  ptrdiff_t co = 0;
  for (; co + 4 <= g.c_out; co += 4) {
    float* d0 = result.data() + co * out_plane;
    float* d1 = d0 + out_plane;
    float* d2 = d1 + out_plane;
    float* d3 = d2 + out_plane;
    for (ptrdiff_t r = 0; r < rows; ++r) {
      const float w0 = k[co * rows + r], w1 = k[(co + 1) * rows + r];
      const float w2 = k[(co + 2) * rows + r], w3 = k[(co + 3) * rows + r];
      const float* src = col.data() + r * out_plane;
      for (ptrdiff_t n = 0; n < out_plane; ++n) {
        const float v = src[n];
        d0[n] += w0 * v;
        d1[n] += w1 * v;
        d2[n] += w2 * v;
        d3[n] += w3 * v;
      }
    }
  }
  for (; co < g.c_out; ++co) {
    float* d0 = result.data() + co * out_plane;
    for (ptrdiff_t r = 0; r < rows; ++r) {
      const float w0 = k[co * rows + r];
      const float* src = col.data() + r * out_plane;
      for (ptrdiff_t n = 0; n < out_plane; ++n) d0[n] += w0 * src[n];
    }
  }

  Shape out_shape{ks[0], static_cast<std::size_t>(out[0]), static_cast<std::size_t>(out[1]),
                  static_cast<std::size_t>(out[2])};
  std::vector<Tensor> inputs{input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return make_result("conv3d", std::move(out_shape), std::move(result), std::move(inputs),
                     [input, kernel, bias, g, out_plane, rows](std::span<const float> gout) {
                       const bool need_x = input.requires_grad();
                       const bool need_k = kernel.requires_grad();
                       const auto k = kernel.values();
                       if (need_k) {
                         // gk[co, r] = sum_n gout[co, n] col[r, n]
                         const auto col = g.im2col(input.values());
                         std::vector<double> gk(k.size());
                         for (ptrdiff_t co = 0; co < g.c_out; ++co) {
                           const float* go = gout.data() + co * out_plane;
                           for (ptrdiff_t r = 0; r < rows; ++r) {
                             const float* src = col.data() + r * out_plane;
                             gk[co * rows + r] = dot(go, src, out_plane);
                           }
                         }
                         detail::accumulate_grad(*kernel.impl(), std::span<const double>(gk));
                       }
                       if (need_x) {
                         // gcol[r, n] = sum_co kernel[co, r] gout[co, n], then scatter back.
                         std::vector<float> gcol(static_cast<std::size_t>(rows * out_plane), 0.0f);
                         for (ptrdiff_t r = 0; r < rows; ++r) {
                           float* dst = gcol.data() + r * out_plane;
                           for (ptrdiff_t co = 0; co < g.c_out; ++co) {
                             const float w = k[co * rows + r];
                             const float* go = gout.data() + co * out_plane;
                             for (ptrdiff_t n = 0; n < out_plane; ++n) dst[n] += w * go[n];
                           }
                         }
                         const auto gx = g.col2im(gcol);
                         detail::accumulate_grad(*input.impl(), std::span<const double>(gx));
                       }
                       if (bias.defined() && bias.requires_grad()) {
                         std::vector<double> gb(static_cast<std::size_t>(g.c_out), 0.0);
                         for (ptrdiff_t co = 0; co < g.c_out; ++co) {
                           const float* go = gout.data() + co * out_plane;
                           for (ptrdiff_t i = 0; i < out_plane; ++i) gb[co] += go[i];
                         }
                         detail::accumulate_grad(*bias.impl(), std::span<const double>(gb));
                       }
                     });
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const Conv1dOptions& options) {
  require_rank(input, 2, "conv1d", "input");
  require_rank(kernel, 3, "conv1d", "kernel");
  const auto c_in = static_cast<ptrdiff_t>(input.size(0));
  const auto t_in = static_cast<ptrdiff_t>(input.size(1));
  const auto c_out = static_cast<ptrdiff_t>(kernel.size(0));
  const auto klen = static_cast<ptrdiff_t>(kernel.size(2));
  if (kernel.size(1) != input.size(0)) {
    throw DimensionError("conv1d: channel axis mismatch, kernel expects " + std::to_string(kernel.size(1)) +
                         " input channels but input has " + std::to_string(input.size(0)));
  }
  if (bias.defined() && (bias.dim() != 1 || bias.size(0) != kernel.size(0))) {
    throw DimensionError("conv1d: bias must have shape [" + std::to_string(kernel.size(0)) + "], got " +
                         shape_string(bias.shape()));
  }
  ptrdiff_t stride = static_cast<ptrdiff_t>(options.stride);
  ptrdiff_t pad = static_cast<ptrdiff_t>(options.padding);
  if (options.same) {
    if (klen % 2 == 0) {
      throw ConfigError("conv1d: same padding needs an odd kernel size, got " + std::to_string(klen));
    }
    if (stride != 1) throw ConfigError("conv1d: same padding requires stride 1");
    pad = (klen - 1) / 2;
  }
  if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
  if (klen > t_in + 2 * pad) {
    throw DimensionError("conv1d: kernel size " + std::to_string(klen) + " exceeds padded time extent " +
                         std::to_string(t_in + 2 * pad));
  }
  const ptrdiff_t t_out = (t_in + 2 * pad - klen) / stride + 1;

  const auto x = input.values();
  const auto k = kernel.values();
  std::vector<float> result(static_cast<std::size_t>(c_out * t_out));
  std::vector<double> acc(static_cast<std::size_t>(t_out));
  for (ptrdiff_t co = 0; co < c_out; ++co) {
    std::fill(acc.begin(), acc.end(), bias.defined() ? static_cast<double>(bias.values()[co]) : 0.0);
    for (ptrdiff_t ci = 0; ci < c_in; ++ci) {
      for (ptrdiff_t j = 0; j < klen; ++j) {
        const double wv = k[(co * c_in + ci) * klen + j];
        const Range r = valid_range(t_out, t_in, stride, j, pad);
        const float* src = x.data() + ci * t_in;
        for (ptrdiff_t t = r.lo; t <= r.hi; ++t) acc[t] += wv * src[t * stride + j - pad];
      }
    }
    std::copy(acc.begin(), acc.end(), result.begin() + co * t_out);
  }

  std::vector<Tensor> inputs{input, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      "conv1d", Shape{static_cast<std::size_t>(c_out), static_cast<std::size_t>(t_out)}, std::move(result),
      std::move(inputs), [input, kernel, bias, c_in, t_in, c_out, klen, t_out, stride, pad](std::span<const float> gout) {
        const auto x = input.values();
        const auto k = kernel.values();
        const bool need_x = input.requires_grad();
        const bool need_k = kernel.requires_grad();
        std::vector<double> gx(need_x ? x.size() : 0);
        std::vector<double> gk(need_k ? k.size() : 0);
        for (ptrdiff_t co = 0; co < c_out; ++co) {
          const float* go = gout.data() + co * t_out;
          for (ptrdiff_t ci = 0; ci < c_in; ++ci) {
            const float* src = x.data() + ci * t_in;
            for (ptrdiff_t j = 0; j < klen; ++j) {
              const ptrdiff_t tap = (co * c_in + ci) * klen + j;
              const double wv = k[tap];
              const Range r = valid_range(t_out, t_in, stride, j, pad);
              double dk = 0.0;
              for (ptrdiff_t t = r.lo; t <= r.hi; ++t) {
                const ptrdiff_t it = t * stride + j - pad;
                if (need_k) dk += static_cast<double>(go[t]) * src[it];
                if (need_x) gx[ci * t_in + it] += wv * go[t];
              }
              if (need_k) gk[tap] += dk;
            }
          }
        }
        if (need_x) detail::accumulate_grad(*input.impl(), std::span<const double>(gx));
        if (need_k) detail::accumulate_grad(*kernel.impl(), std::span<const double>(gk));
        if (bias.defined() && bias.requires_grad()) {
          std::vector<double> gb(static_cast<std::size_t>(c_out), 0.0);
          for (ptrdiff_t co = 0; co < c_out; ++co)
            for (ptrdiff_t t = 0; t < t_out; ++t) gb[co] += gout[co * t_out + t];
          detail::accumulate_grad(*bias.impl(), std::span<const double>(gb));
        }
      });
}

Tensor maxpool3d(const Tensor& input, Index3 window, Index3 stride) {
  require_rank(input, 4, "maxpool3d", "input");
  const auto& s = input.shape();
  std::array<std::size_t, 3> out{};
  for (int axis = 0; axis < 3; ++axis) {
    if (stride[axis] < 1) throw ConfigError(std::string("maxpool3d: stride along ") + kAxisNames[axis] + " must be >= 1");
    if (window[axis] < 1 || window[axis] > s[axis + 1]) {
      throw DimensionError(std::string("maxpool3d: window extent ") + std::to_string(window[axis]) + " invalid for " +
                           kAxisNames[axis] + " extent " + std::to_string(s[axis + 1]));
    }
    out[axis] = (s[axis + 1] - window[axis]) / stride[axis] + 1;
  }
  const std::size_t channels = s[0], d = s[1], h = s[2], w = s[3];
  const auto x = input.values();
  std::vector<float> result(channels * out[0] * out[1] * out[2]);
  std::vector<std::size_t> argmax(result.size());
  std::size_t o = 0;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t z = 0; z < out[0]; ++z)
      for (std::size_t y = 0; y < out[1]; ++y)
        for (std::size_t xo = 0; xo < out[2]; ++xo, ++o) {
          std::size_t best = 0;
          float best_value = 0.0f;
          bool first = true;
          for (std::size_t a = 0; a < window[0]; ++a)
            for (std::size_t b = 0; b < window[1]; ++b)
              for (std::size_t cc = 0; cc < window[2]; ++cc) {
                const std::size_t idx =
                    ((c * d + z * stride[0] + a) * h + y * stride[1] + b) * w + xo * stride[2] + cc;
                if (first || x[idx] > best_value) {
                  best = idx;
                  best_value = x[idx];
                  first = false;
                }
              }
          result[o] = best_value;
          argmax[o] = best;
        }
  Shape out_shape{channels, out[0], out[1], out[2]};
  return make_result("maxpool3d", std::move(out_shape), std::move(result), {input},
                     [input, argmax = std::move(argmax)](std::span<const float> gout) {
                       std::vector<double> gx(input.numel(), 0.0);
                       for (std::size_t i = 0; i < gout.size(); ++i) gx[argmax[i]] += gout[i];
                       detail::accumulate_grad(*input.impl(), std::span<const double>(gx));
                     });
}

Tensor adaptive_avg_pool(const Tensor& input) {
  if (input.dim() < 2) {
    throw DimensionError("adaptive_avg_pool: expected [C, spatial...], got " + shape_string(input.shape()));
  }
  const std::size_t channels = input.size(0);
  const std::size_t cells = input.numel() / channels;
  const auto x = input.values();
  std::vector<float> result(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i) total += x[c * cells + i];
    result[c] = static_cast<float>(total / static_cast<double>(cells));
  }
  return make_result("adaptive_avg_pool", Shape{channels}, std::move(result), {input},
                     [input, channels, cells](std::span<const float> gout) {
                       std::vector<double> gx(channels * cells);
                       for (std::size_t c = 0; c < channels; ++c) {
                         const double v = static_cast<double>(gout[c]) / static_cast<double>(cells);
                         std::fill_n(gx.begin() + static_cast<ptrdiff_t>(c * cells), cells, v);
                       }
                       detail::accumulate_grad(*input.impl(), std::span<const double>(gx));
                     });
}

Tensor relu(const Tensor& input) {
  const auto x = input.values();
  std::vector<float> result(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) result[i] = x[i] > 0.0f ? x[i] : 0.0f;
  return make_result("relu", input.shape(), std::move(result), {input}, [input](std::span<const float> gout) {
    const auto x = input.values();
    std::vector<float> gx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0.0f ? gout[i] : 0.0f;
    detail::accumulate_grad(*input.impl(), std::span<const float>(gx));
  });
}

Tensor instance_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, double epsilon) {
  if (input.dim() < 2) {
    throw DimensionError("instance_norm: expected [C, ...], got " + shape_string(input.shape()));
  }
  const std::size_t channels = input.size(0);
  const std::size_t n = input.numel() / channels;
  if (n < 2) throw DimensionError("instance_norm: needs at least 2 elements per channel");
  for (const Tensor* p : {&scale, &shift}) {
    if (p->dim() != 1 || p->size(0) != channels) {
      throw DimensionError("instance_norm: affine parameters must have shape [" + std::to_string(channels) + "]");
    }
  }
  const auto x = input.values();
  const auto gamma = scale.values();
  const auto beta = shift.values();
  std::vector<double> normalized(x.size());
  std::vector<double> inv_std(channels);
  std::vector<float> result(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    const float* xc = x.data() + c * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xc[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xc[i] - mean) * (xc[i] - mean);
    var /= static_cast<double>(n);
    inv_std[c] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t i = 0; i < n; ++i) {
      const double xhat = (xc[i] - mean) * inv_std[c];
      normalized[c * n + i] = xhat;
      result[c * n + i] = static_cast<float>(gamma[c] * xhat + beta[c]);
    }
  }
  return make_result(
      "instance_norm", input.shape(), std::move(result), {input, scale, shift},
      [input, scale, shift, channels, n, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](std::span<const float> gout) {
        const auto gamma = scale.values();
        std::vector<double> gx(input.requires_grad() ? channels * n : 0);
        std::vector<double> ggamma(channels, 0.0), gbeta(channels, 0.0);
        for (std::size_t c = 0; c < channels; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double gi = gout[c * n + i];
            sum_g += gi;
            sum_gx += gi * normalized[c * n + i];
          }
          ggamma[c] = sum_gx;
          gbeta[c] = sum_g;
          if (!gx.empty()) {
            // d/dx of gamma*xhat: (gamma*inv_std/n) * (n*g - sum(g) - xhat*sum(g*xhat))
            const double factor = gamma[c] * inv_std[c] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
              gx[c * n + i] = factor * (static_cast<double>(n) * gout[c * n + i] - sum_g -
                                        normalized[c * n + i] * sum_gx);
            }
          }
        }
        if (!gx.empty()) detail::accumulate_grad(*input.impl(), std::span<const double>(gx));
        detail::accumulate_grad(*scale.impl(), std::span<const double>(ggamma));
        detail::accumulate_grad(*shift.impl(), std::span<const double>(gbeta));
      });
}

Tensor residual_add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("residual_add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<float> result(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) result[i] = av[i] + bv[i];
  return make_result("residual_add", a.shape(), std::move(result), {a, b}, [a, b](std::span<const float> gout) {
    detail::accumulate_grad(*a.impl(), gout);
    detail::accumulate_grad(*b.impl(), gout);
  });
}

Tensor stack_columns(std::span<const Tensor> columns) {
  if (columns.empty()) throw DimensionError("stack_columns: need at least one column");
  const std::size_t rows = columns.front().numel();
  const std::size_t cols = columns.size();
  std::vector<float> result(rows * cols);
  for (std::size_t t = 0; t < cols; ++t) {
    if (columns[t].numel() != rows) {
      throw DimensionError("stack_columns: column " + std::to_string(t) + " has " +
                           std::to_string(columns[t].numel()) + " elements, expected " + std::to_string(rows));
    }
    const auto v = columns[t].values();
    for (std::size_t e = 0; e < rows; ++e) result[e * cols + t] = v[e];
  }
  std::vector<Tensor> inputs(columns.begin(), columns.end());
  return make_result("stack_columns", Shape{rows, cols}, std::move(result), inputs,
                     [inputs, rows, cols](std::span<const float> gout) {
                       std::vector<float> g(rows);
                       for (std::size_t t = 0; t < cols; ++t) {
                         if (!inputs[t].requires_grad()) continue;
                         for (std::size_t e = 0; e < rows; ++e) g[e] = gout[e * cols + t];
                         detail::accumulate_grad(*inputs[t].impl(), std::span<const float>(g));
                       }
                     });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear", "weight");
  const std::size_t m = weight.size(0), n = weight.size(1);
  if (input.numel() != n) {
    throw DimensionError("linear: input has " + std::to_string(input.numel()) + " elements, weight expects " +
                         std::to_string(n));
  }
  if (bias.defined() && bias.numel() != m) throw DimensionError("linear: bias must have " + std::to_string(m) + " elements");
  const auto x = input.values();
  const auto wv = weight.values();
  std::vector<float> result(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = bias.defined() ? bias.values()[i] : 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(wv[i * n + j]) * x[j];
    result[i] = static_cast<float>(acc);
  }
  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result("linear", Shape{m}, std::move(result), std::move(inputs),
                     [input, weight, bias, m, n](std::span<const float> gout) {
                       const auto x = input.values();
                       const auto wv = weight.values();
                       if (input.requires_grad()) {
                         std::vector<double> gx(n, 0.0);
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) gx[j] += static_cast<double>(wv[i * n + j]) * gout[i];
                         detail::accumulate_grad(*input.impl(), std::span<const double>(gx));
                       }
                       if (weight.requires_grad()) {
                         std::vector<double> gw(m * n);
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) gw[i * n + j] = static_cast<double>(gout[i]) * x[j];
                         detail::accumulate_grad(*weight.impl(), std::span<const double>(gw));
                       }
                       if (bias.defined()) detail::accumulate_grad(*bias.impl(), gout);
                     });
}

Tensor reshape(const Tensor& input, Shape shape) {
  if (shape_numel(shape) != input.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(input.shape()) + " as " + shape_string(shape));
  }
  const auto v = input.values();
  return make_result("reshape", std::move(shape), std::vector<float>(v.begin(), v.end()), {input},
                     [input](std::span<const float> gout) { detail::accumulate_grad(*input.impl(), gout); });
}

Tensor sum(const Tensor& input) {
  double total = 0.0;
  for (float v : input.values()) total += v;
  return make_result("sum", Shape{1}, {static_cast<float>(total)}, {input}, [input](std::span<const float> gout) {
    std::vector<float> g(input.numel(), gout[0]);
    detail::accumulate_grad(*input.impl(), std::span<const float>(g));
  });
}

Tensor square(const Tensor& input) {
  const auto x = input.values();
  std::vector<float> result(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) result[i] = x[i] * x[i];
  return make_result("square", input.shape(), std::move(result), {input}, [input](std::span<const float> gout) {
    const auto x = input.values();
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i] * gout[i];
    detail::accumulate_grad(*input.impl(), std::span<const double>(g));
  });
}

Tensor weighted_mse(const Tensor& prediction, std::span<const double> target, std::span<const double> weights) {
  const std::size_t n = prediction.numel();
  if (target.size() != n || weights.size() != n) {
    throw DimensionError("weighted_mse: prediction has " + std::to_string(n) + " frames, target " +
                         std::to_string(target.size()) + ", weights " + std::to_string(weights.size()));
  }
  const auto p = prediction.values();
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double r = static_cast<double>(p[t]) - target[t];
    total += weights[t] * r * r;
  }
  std::vector<double> tgt(target.begin(), target.end());
  std::vector<double> wts(weights.begin(), weights.end());
  return make_result("weighted_mse", Shape{1}, {static_cast<float>(total / static_cast<double>(n))}, {prediction},
                     [prediction, tgt = std::move(tgt), wts = std::move(wts)](std::span<const float> gout) {
                       const auto p = prediction.values();
                       const double scale = 2.0 * gout[0] / static_cast<double>(p.size());
                       std::vector<double> g(p.size());
                       for (std::size_t t = 0; t < p.size(); ++t) g[t] = scale * wts[t] * (p[t] - tgt[t]);
                       detail::accumulate_grad(*prediction.impl(), std::span<const double>(g));
                     });
}

}  // namespace fcdlif::ops
