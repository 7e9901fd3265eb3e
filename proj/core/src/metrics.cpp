#include "fcdlif/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "fcdlif/error.hpp"
#include "fcdlif/training.hpp"

namespace fcdlif {
namespace {

void check_lengths(const char* what, std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": lengths differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
  if (a == 0) throw DimensionError(std::string(what) + ": empty input");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Means and centred sums of squares and products (not divided by n).
struct Moments {
  double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
  Moments m;
  m.mx = mean_of(x);
  m.my = mean_of(y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mx;
    const double dy = y[i] - m.my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

}  // namespace

double mse(std::span<const double> prediction, std::span<const double> target) {
  check_lengths("mse", prediction.size(), target.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) total += (prediction[i] - target[i]) * (prediction[i] - target[i]);
  return total / static_cast<double>(prediction.size());
}

double mbe(std::span<const double> prediction, std::span<const double> target) {
  check_lengths("mbe", prediction.size(), target.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) total += prediction[i] - target[i];
  return total / static_cast<double>(prediction.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths("pearson", x.size(), y.size());
  const auto m = moments(x, y);
  if (m.sxx == 0.0 || m.syy == 0.0) throw NumericError("pearson: zero-variance input");
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

OrthRegressionResult orthogonal_regression(std::span<const double> x, std::span<const double> y) {
  check_lengths("orthogonal_regression", x.size(), y.size());
  if (x.size() < 3) throw DimensionError("orthogonal_regression: need at least 3 points");
  const auto m = moments(x, y);
  if (m.sxx == 0.0 || m.syy == 0.0) throw NumericError("orthogonal_regression: degenerate zero-variance input");
  if (m.sxy == 0.0) throw NumericError("orthogonal_regression: uncorrelated input, slope undefined");
  const double diff = m.syy - m.sxx;
  OrthRegressionResult r;
  r.slope = (diff + std::sqrt(diff * diff + 4.0 * m.sxy * m.sxy)) / (2.0 * m.sxy);
  r.intercept = m.my - r.slope * m.mx;
  r.r = std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
  r.r2 = r.r * r.r;
  return r;
}

TTestResult paired_ttest(std::span<const double> x, std::span<const double> y, double alpha) {
  check_lengths("paired_ttest", x.size(), y.size());
  if (x.size() < 2) throw DimensionError("paired_ttest: need at least 2 pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("paired_ttest: alpha must lie in (0, 1)");
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
  const double mean = mean_of(d);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult res;
  res.dof = n - 1;
  if (sd == 0.0) {
    res.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    res.p = mean == 0.0 ? 1.0 : 0.0;
  } else {
    res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const boost::math::students_t dist(static_cast<double>(res.dof));
    res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t))));
  }
  res.reject = res.p < alpha;
  return res;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DimensionError("percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) throw ConfigError("percentile: level must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PercentileSummary summarize_percentiles(std::span<const double> values) {
  PercentileSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = percentile(v, PercentileSummary::kLevels[i]);
  return s;
}

std::vector<SegmentErrors> segment_error_profile(std::span<const InputFunction> predictions,
                                                 std::span<const InputFunction> targets) {
  check_lengths("segment_error_profile", predictions.size(), targets.size());
  const std::size_t len = targets.front().size();
  const auto w = LossWeights::for_length(len);
  std::vector<SegmentErrors> out{{"peak", {}, {}}, {"intermediate", {}, {}}, {"tail", {}, {}}};
  const std::size_t edge1 = w.peak_frames;
  const std::size_t edge2 = w.peak_frames + w.intermediate_frames;
  for (std::size_t c = 0; c < predictions.size(); ++c) {
    if (predictions[c].size() != len || targets[c].size() != len) {
      throw DimensionError("segment_error_profile: curve " + std::to_string(c) + " has a different length");
    }
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t seg = t < edge1 ? 0 : (t < edge2 ? 1 : 2);
      out[seg].errors.push_back(predictions[c].values[t] - targets[c].values[t]);
    }
  }
  for (auto& s : out) s.summary = summarize_percentiles(s.errors);
  return out;
}

std::vector<QqPoint> qq_points(std::span<const double> residuals) {
  if (residuals.size() < 3) throw DimensionError("qq_points: need at least 3 residuals");
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal standard;
  const double n = static_cast<double>(sorted.size());
  std::vector<QqPoint> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out[i] = {boost::math::quantile(standard, (static_cast<double>(i) + 0.5) / n), sorted[i]};
  }
  return out;
}

}  // namespace fcdlif
