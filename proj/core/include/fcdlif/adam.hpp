#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcdlif/tensor.hpp"

namespace fcdlif {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment buffers for a fixed list of parameters.
class AdamState {
 public:
  AdamState(std::span<const Tensor> parameters, AdamOptions options = {});

  const AdamOptions& options() const { return options_; }
  std::uint64_t step_count() const { return step_; }
  std::span<const float> first_moment(std::size_t i) const { return m_.at(i); }
  std::span<const float> second_moment(std::size_t i) const { return v_.at(i); }
  std::size_t size() const { return m_.size(); }

 private:
  friend void adam_step(std::span<Tensor>, std::span<const std::string>, AdamState&);

  AdamOptions options_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  std::uint64_t step_ = 0;
};

// One bias-corrected ADAM update using the gradients currently stored on the
// parameters. `names` (same length as params, or empty) labels diagnostics.
// Throws NumericError naming the parameter if a gradient is not finite.
void adam_step(std::span<Tensor> params, std::span<const std::string> names, AdamState& state);

inline void adam_step(std::span<Tensor> params, AdamState& state) { adam_step(params, {}, state); }

}  // namespace fcdlif
