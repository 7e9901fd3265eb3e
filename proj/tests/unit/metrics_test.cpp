#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fcdlif/error.hpp"
#include "fcdlif/metrics.hpp"
#include "stat_oracles.hpp"

using namespace fcdlif;

namespace {

// Perpendicular-distance minimiser by golden-section search on the line angle.
double tls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  auto cost = [&](double th) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = -(x[i] - mx) * std::sin(th) + (y[i] - my) * std::cos(th);
      s += d * d;
    }
    return s;
  };
  double best = 0, best_cost = 1e300;
  for (int i = 0; i < 3600; ++i) {
    const double th = -std::numbers::pi / 2 + std::numbers::pi * i / 3600;
    if (cost(th) < best_cost) best_cost = cost(th), best = th;
  }
  double lo = best - std::numbers::pi / 3600, hi = best + std::numbers::pi / 3600;
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    (cost(m1) < cost(m2) ? hi : lo) = cost(m1) < cost(m2) ? m2 : m1;
  }
  return std::tan(0.5 * (lo + hi));
}

}  // namespace

TEST(Errors, MseAndMbe) {
  const std::vector<double> p{1, 2, 3}, y{0, 2, 5};
  EXPECT_DOUBLE_EQ(mse(p, y), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(mbe(p, y), -1.0 / 3.0);
  EXPECT_THROW(mse(p, std::vector<double>{1}), DimensionError);
}

TEST(Deming, ExactLineSlopeTwo) {
  const std::vector<double> x{0, 1, 2}, y{0, 2, 4};
  const auto r = orthogonal_regression(x, y);
  EXPECT_EQ(r.slope, 2.0);
  EXPECT_NEAR(r.intercept, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.r, 1.0);
}

TEST(Deming, MatchesPerpendicularDistanceMinimiser) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(30), y(30);
    const double slope = 0.2 + trial * 0.15;
    for (std::size_t i = 0; i < 30; ++i) {
      x[i] = n(rng) * 2;
      y[i] = slope * x[i] + 0.5 * n(rng);
    }
    EXPECT_NEAR(orthogonal_regression(x, y).slope, tls_slope(x, y), 1e-6 * (1 + slope));
  }
}

TEST(Deming, SymmetricUnderAxisSwap) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  std::vector<double> x(50), y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x[i] = n(rng);
    y[i] = -1.3 * x[i] + 0.3 * n(rng);
  }
  EXPECT_NEAR(orthogonal_regression(x, y).slope * orthogonal_regression(y, x).slope, 1.0, 1e-12);
}

TEST(Deming, ConsistentUnderSymmetricNoise) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> x(10000), y(10000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double truth = u(rng);
    x[i] = truth + n(rng);
    y[i] = 1.5 * truth + 0.3 + n(rng);
  }
  const auto r = orthogonal_regression(x, y);
  EXPECT_NEAR(r.slope, 1.5, 0.02);
  EXPECT_NEAR(r.intercept, 0.3, 0.02);
}

TEST(Deming, DegenerateInputs) {
  EXPECT_THROW(orthogonal_regression(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DimensionError);
  EXPECT_THROW(orthogonal_regression(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), NumericError);
}

TEST(PairedTTest, OneSampleReferenceValues) {
  const std::vector<double> d{1.2, -0.4, 0.7, 0.3, -0.1}, zero(5, 0.0);
  const auto r = paired_ttest(d, zero);
  EXPECT_NEAR(r.t, 1.1975989212497897, 1e-12);
  EXPECT_NEAR(r.p, 0.297187372379091, 1e-9);
  EXPECT_EQ(r.dof, 4u);
  EXPECT_FALSE(r.reject);
}

TEST(PairedTTest, RelatedSamplesReferenceValues) {
  const std::vector<double> x{3.1, 2.0, 4.5, 5.2, 1.1, 0.7, 2.9}, y{2.5, 2.2, 4.0, 5.9, 1.0, 1.7, 2.1};
  const auto r = paired_ttest(x, y);
  EXPECT_NEAR(r.t, 0.055441595321592756, 1e-12);
  EXPECT_NEAR(r.p, 0.9575867161311139, 1e-9);
}

TEST(PairedTTest, MatchesIntegratedDensity) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (std::size_t size : {3u, 5u, 12u, 42u}) {
    std::vector<double> x(size), y(size);
    for (std::size_t i = 0; i < size; ++i) {
      x[i] = n(rng) + 0.4;
      y[i] = n(rng);
    }
    const auto r = paired_ttest(x, y);
    EXPECT_NEAR(r.p, oracle::t_two_sided(r.t, static_cast<double>(size - 1)), 1e-6) << size;
    EXPECT_EQ(r.reject, r.p < 0.05);
  }
}

TEST(PairedTTest, ConstantDifferences) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(paired_ttest(x, x).p, 1.0);
  const std::vector<double> y{0, 1, 2};
  const auto r = paired_ttest(x, y);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_TRUE(r.reject);
}

TEST(PairedTTest, FalsePositiveRateNearAlpha) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  int rejections = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x(10), y(10);
    for (int i = 0; i < 10; ++i) x[i] = n(rng), y[i] = n(rng);
    rejections += paired_ttest(x, y).reject;
  }
  // binomial sd at 4000 trials is about 0.0034
  EXPECT_NEAR(static_cast<double>(rejections) / trials, 0.05, 0.012);
}

TEST(Percentile, LinearInterpolationBetweenOrderStatistics) {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
  const auto s = summarize_percentiles(v);
  const std::array<double, 5> want{1.0, 1.75, 3.5, 5.25, 7.95};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.values[i], want[i], 1e-12);
  EXPECT_EQ(s.count, 8u);
}

TEST(Percentile, AgreesWithSortOracle) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial * 3);
    for (auto& x : v) x = u(rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.0, 5.0, 25.0, 50.0, 75.0, 95.0, 100.0}) {
      const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      const double want = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
      EXPECT_NEAR(percentile(v, q), want, 1e-12);
    }
    EXPECT_EQ(percentile(v, 0.0), sorted.front());
    EXPECT_EQ(percentile(v, 100.0), sorted.back());
  }
  EXPECT_THROW(percentile({}, 50.0), DimensionError);
}

TEST(SegmentProfile, PoolsSignedErrorsBySegment) {
  std::vector<InputFunction> pred(2), truth(2);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t t = 0; t < 42; ++t) {
      truth[c].values.push_back(1.0);
      pred[c].values.push_back(t < 25 ? 2.0 : t < 34 ? 0.5 : 1.0 + 0.1 * c);
    }
  }
  const auto seg = segment_error_profile(pred, truth);
  ASSERT_EQ(seg.size(), 3u);
  EXPECT_EQ(seg[0].segment, "peak");
  EXPECT_EQ(seg[0].errors.size(), 50u);
  EXPECT_DOUBLE_EQ(seg[0].summary.values[2], 1.0);
  EXPECT_EQ(seg[1].errors.size(), 18u);
  EXPECT_DOUBLE_EQ(seg[1].summary.values[2], -0.5);
  EXPECT_EQ(seg[2].errors.size(), 16u);
  EXPECT_NEAR(seg[2].summary.values[2], 0.05, 1e-12);
}

TEST(QqPlot, PlottingPositionsAndSortedResiduals) {
  const std::vector<double> r{0.3, -1.0, 2.0, 0.0, -0.2};
  const auto q = qq_points(r);
  const std::array<double, 5> z{-1.2815515655446004, -0.5244005127080407, 0.0, 0.5244005127080407,
                                1.2815515655446004};
  const std::array<double, 5> s{-1.0, -0.2, 0.0, 0.3, 2.0};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(q[i].theoretical, z[i], 1e-12);
    EXPECT_EQ(q[i].sample, s[i]);
  }
  EXPECT_THROW(qq_points(std::vector<double>{1, 2}), DimensionError);
}
