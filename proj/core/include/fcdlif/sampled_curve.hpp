#pragma once

#include <cstddef>
#include <vector>

namespace fcdlif {

// Piecewise-linear curve through samples on a uniform time grid.
class SampledCurve {
 public:
  SampledCurve() = default;
  SampledCurve(double start_s, double step_s, std::vector<double> values);

  double start_s() const { return start_; }
  double step_s() const { return step_; }
  double end_s() const { return start_ + step_ * static_cast<double>(values_.size() - 1); }
  double time(std::size_t i) const { return start_ + step_ * static_cast<double>(i); }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  // Linear interpolation; t must lie within [start, end].
  double at(double t) const;
  // Exact integral of the interpolant over [a, b] within the grid span.
  double integral(double a, double b) const;
  double average(double a, double b) const { return integral(a, b) / (b - a); }

 private:
  double cumulative(double t) const;

  double start_ = 0.0;
  double step_ = 1.0;
  std::vector<double> values_;
  std::vector<double> prefix_;  // integral from start to node i
};

}  // namespace fcdlif
