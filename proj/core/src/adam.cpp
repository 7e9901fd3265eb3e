#include "fcdlif/adam.hpp"

#include <cmath>

#include "fcdlif/error.hpp"

namespace fcdlif {

AdamState::AdamState(std::span<const Tensor> parameters, AdamOptions options) : options_(options) {
  for (const auto& p : parameters) {
    shapes_.push_back(p.shape());
    m_.emplace_back(p.numel(), 0.0f);
    v_.emplace_back(p.numel(), 0.0f);
  }
}

void adam_step(std::span<Tensor> params, std::span<const std::string> names, AdamState& state) {
  if (params.size() != state.m_.size()) {
    throw ConfigError("adam_step: optimizer tracks " + std::to_string(state.m_.size()) + " parameters, got " +
                      std::to_string(params.size()));
  }
  auto label = [&](std::size_t i) {
    return i < names.size() ? names[i] : "parameter #" + std::to_string(i);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != state.shapes_[i]) {
      throw DimensionError("adam_step: " + label(i) + " changed shape since the optimizer was created");
    }
    const auto g = params[i].grad();
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!std::isfinite(g[j])) {
        throw NumericError("adam_step: non-finite gradient in " + label(i) + " at element " + std::to_string(j) +
                           " (step " + std::to_string(state.step_ + 1) + ")");
      }
    }
  }

  const auto& o = state.options_;
  const auto t = static_cast<double>(++state.step_);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = params[i].grad();
    if (g.empty()) continue;  // never reached by a loss
    auto p = params[i].mutable_values();
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
      const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = o.learning_rate * (mj / correction1) / (std::sqrt(vj / correction2) + o.epsilon);
      p[j] = static_cast<float>(p[j] - update);
    }
  }
}

}  // namespace fcdlif
