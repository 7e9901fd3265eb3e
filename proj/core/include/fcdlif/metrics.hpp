#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fcdlif/image.hpp"

namespace fcdlif {

double mse(std::span<const double> prediction, std::span<const double> target);
// Mean of (prediction - target); positive means overestimation.
double mbe(std::span<const double> prediction, std::span<const double> target);
double pearson(std::span<const double> x, std::span<const double> y);

struct OrthRegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  double r2 = 0.0;
};

// Deming regression with equal error variances in x and y.
OrthRegressionResult orthogonal_regression(std::span<const double> x, std::span<const double> y);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool reject = false;
  std::size_t dof = 0;
};

// Two-sided paired t-test on d = x - y. A zero-spread difference gives
// t = 0, p = 1 when mean(d) = 0 and p = 0 otherwise.
TTestResult paired_ttest(std::span<const double> x, std::span<const double> y, double alpha = 0.05);

// Linear interpolation between order statistics, q in [0, 100].
double percentile(std::vector<double> values, double q);

struct PercentileSummary {
  static constexpr std::array<double, 5> kLevels{5.0, 25.0, 50.0, 75.0, 95.0};
  std::array<double, 5> values{};
  std::size_t count = 0;
};

PercentileSummary summarize_percentiles(std::span<const double> values);

struct SegmentErrors {
  std::string segment;  // "peak", "intermediate" or "tail"
  std::vector<double> errors;  // prediction - target, pooled over curves
  PercentileSummary summary;
};

// Groups per-frame errors by loss segment. Curves must share one length.
std::vector<SegmentErrors> segment_error_profile(std::span<const InputFunction> predictions,
                                                 std::span<const InputFunction> targets);

struct QqPoint {
  double theoretical = 0.0;
  double sample = 0.0;
};

// Sorted residuals against standard normal quantiles at (i - 0.5) / n.
std::vector<QqPoint> qq_points(std::span<const double> residuals);

}  // namespace fcdlif
