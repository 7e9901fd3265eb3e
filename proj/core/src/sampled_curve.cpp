#include "fcdlif/sampled_curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fcdlif/error.hpp"

namespace fcdlif {

SampledCurve::SampledCurve(double start_s, double step_s, std::vector<double> values)
    : start_(start_s), step_(step_s), values_(std::move(values)) {
  if (!(step_ > 0.0)) throw ConfigError("sampled curve step must be positive");
  if (values_.size() < 2) throw ConfigError("sampled curve needs at least two samples");
  prefix_.resize(values_.size());
  prefix_[0] = 0.0;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    prefix_[i] = prefix_[i - 1] + 0.5 * step_ * (values_[i - 1] + values_[i]);
  }
}

double SampledCurve::at(double t) const {
  const double eps = 1e-9 * step_;
  if (t < start_ - eps || t > end_s() + eps) {
    throw DimensionError("time " + std::to_string(t) + " s outside sampled span [" + std::to_string(start_) + ", " +
                         std::to_string(end_s()) + "]");
  }
  const double u = std::clamp((t - start_) / step_, 0.0, static_cast<double>(values_.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(u), values_.size() - 2);
  const double frac = u - static_cast<double>(i);
  return values_[i] + frac * (values_[i + 1] - values_[i]);
}

double SampledCurve::cumulative(double t) const {
  const double u = std::clamp((t - start_) / step_, 0.0, static_cast<double>(values_.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(u), values_.size() - 2);
  const double dt = (u - static_cast<double>(i)) * step_;
  const double vt = at(t);
  return prefix_[i] + 0.5 * dt * (values_[i] + vt);
}

double SampledCurve::integral(double a, double b) const {
  at(a);
  at(b);  // range checks
  return cumulative(b) - cumulative(a);
}

}  // namespace fcdlif
