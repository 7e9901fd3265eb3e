#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fcdlif/error.hpp"
#include "fcdlif/phantom.hpp"
#include "fcdlif/sampled_curve.hpp"

using namespace fcdlif;

namespace {

// Direct transcription of the tri-exponential, per-minute constants.
double feng_minutes(double t_min, double t0_min) {
  if (t_min <= t0_min) return 0.0;
  const double u = t_min - t0_min;
  return (851.1 * u - 21.9 - 20.8) * std::exp(-4.13 * u) + 21.9 * std::exp(-0.12 * u) + 20.8 * std::exp(-0.01 * u);
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

FengParams classic(double t0_s = 0.0) { return FengParams::per_minute(851.1, 21.9, 20.8, -4.13, -0.12, -0.01, t0_s); }

}  // namespace

TEST(Feng, MatchesPerMinuteFormula) {
  const auto p = classic(30.0);
  for (double t : {0.0, 29.9, 30.0, 31.0, 45.0, 90.0, 600.0, 3600.0}) {
    EXPECT_NEAR(feng_aif(t, p), feng_minutes(t / 60.0, 0.5), 1e-9 * (1 + feng_minutes(t / 60.0, 0.5))) << t;
  }
}

TEST(Feng, ContinuousAtOnsetWithSinglePeak) {
  const auto p = classic(30.0);
  EXPECT_NEAR(feng_aif(30.0 + 1e-9, p), 0.0, 1e-6);
  std::size_t turns = 0;
  double prev = feng_aif(30.5, p), prev_slope = 1.0;
  for (double t = 31.0; t < 600.0; t += 0.5) {
    const double v = feng_aif(t, p);
    const double slope = v - prev;
    if (prev_slope > 0 && slope <= 0) ++turns;
    prev = v;
    prev_slope = slope;
  }
  EXPECT_EQ(turns, 1u);
}

TEST(Feng, IntegralMatchesQuadrature) {
  const auto p = classic(30.0);
  for (auto [a, b] : {std::pair{0.0, 30.0}, {0.0, 60.0}, {35.0, 40.0}, {100.0, 3600.0}, {25.0, 45.0}}) {
    const double q = simpson([&](double t) { return feng_aif(t, p); }, a, b);
    EXPECT_NEAR(feng_integral(a, b, p), q, 1e-7 * (1 + std::abs(q))) << a << ".." << b;
  }
  EXPECT_NEAR(feng_integral(60.0, 35.0, p), -feng_integral(35.0, 60.0, p), 1e-12);
}

TEST(Feng, InvalidOrderingIsRejected) {
  auto p = classic();
  p.lambda2 = p.lambda1 * 2;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(TissueTac, MatchesClosedFormForExponentialInput) {
  // Cp = e^{-a t}: C(t) = K1 [k3/(k2+k3) (1-e^{-at})/a + k2/(k2+k3) (e^{-at} - e^{-kt})/(k - a)]
  const KineticParams kp{0.6, 0.3, 0.1, 0.0};
  const double a = 0.05 / 60.0, k = (kp.k2 + kp.k3) / 60.0, k1 = kp.k1 / 60.0;
  std::vector<double> t, cp;
  for (int i = 0; i <= 7200; ++i) {
    t.push_back(0.25 * i);
    cp.push_back(std::exp(-a * t.back()));
  }
  const auto c = tissue_tac(t, kp, cp);
  for (std::size_t i = 0; i < t.size(); i += 400) {
    const double x = t[i];
    const double want = k1 * (kp.k3 / (kp.k2 + kp.k3) * (1 - std::exp(-a * x)) / a +
                              kp.k2 / (kp.k2 + kp.k3) * (std::exp(-a * x) - std::exp(-k * x)) / (k - a));
    EXPECT_NEAR(c[i], want, 1e-5 * (1 + want)) << x;
  }
}

TEST(TissueTac, TrappedCompartmentMassBalance) {
  // With k2 = 0 everything entering is trapped: C(t) = K1 * int Cp.
  const KineticParams kp{0.2, 0.0, 0.1, 0.0};
  const auto p = classic(30.0);
  std::vector<double> t, cp;
  for (int i = 0; i <= 6000; ++i) {
    t.push_back(0.5 * i);
    cp.push_back(feng_aif(t.back(), p));
  }
  const auto c = tissue_tac(t, kp, cp);
  for (std::size_t i = 600; i < t.size(); i += 900) {
    EXPECT_NEAR(c[i], kp.k1 / 60.0 * feng_integral(0.0, t[i], p), 2e-3 * c[i]);
  }
}

TEST(TissueTac, BloodFractionMixesPlasma) {
  const std::vector<double> t{0.0, 0.5, 1.0}, cp{0.0, 2.0, 4.0};
  const auto c = tissue_tac(t, {0.0, 0.1, 0.0, 0.25}, cp);
  EXPECT_DOUBLE_EQ(c[2], 1.0);
  EXPECT_THROW(tissue_tac(t, {0.1, 0.0, 0.0, 0.0}, cp), NumericError);
  const std::vector<double> coarse{0.0, 1.0};
  EXPECT_THROW(tissue_tac(coarse, {}, coarse), ConfigError);
}

TEST(Phantom, EveryRegionPresentInLabelMap) {
  const auto ph = mouse_phantom({24, 16, 16});
  const auto labels = ph.label_map();
  for (std::size_t r = 0; r < ph.regions.size(); ++r) {
    EXPECT_NE(std::find(labels.begin(), labels.end(), static_cast<int>(r)), labels.end()) << ph.regions[r].name;
  }
  EXPECT_NE(std::find(labels.begin(), labels.end(), -1), labels.end());
}

TEST(Phantom, NoiselessBloodPoolEqualsFrameAveragedAif) {
  const auto ph = mouse_phantom({24, 16, 16});
  const auto p = classic(30.0);
  const auto s = render_phantom(ph, FrameSchedule::standard(), p, 1, kNoiseless);
  const auto labels = ph.label_map();
  std::size_t blood = 0;
  while (!ph.regions[blood].blood_pool) ++blood;
  const auto v = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), static_cast<int>(blood)) - labels.begin());
  for (std::size_t t = 0; t < 42; ++t) {
    const auto& f = s.image.schedule[t];
    const double q = simpson([&](double x) { return feng_aif(x, p); }, f.start_s, f.end_s(), 2000) / f.duration_s;
    EXPECT_NEAR(s.aif.values[t], q, 1e-6 * (1 + q));
    EXPECT_NEAR(s.image.frame(t)[v], q, 1e-5 * (1 + q));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) EXPECT_EQ(s.image.frame(41)[i], 0.0f);
  }
}

TEST(Phantom, PoissonNoiseIsUnbiasedWithCountScaledVariance) {
  const auto ph = mouse_phantom({24, 16, 16});
  const auto p = classic(30.0);
  const auto clean = render_phantom(ph, FrameSchedule::standard(), p, 0, kNoiseless);
  const double scale = 5.0;
  const std::size_t frame = 38;  // 300 s
  const double exposure = 300.0 * scale;
  double bias = 0.0, z2 = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto noisy = render_phantom(ph, FrameSchedule::standard(), p, seed, scale);
    for (std::size_t v = 0; v < ph.grid.numel(); ++v) {
      const double mu = clean.image.frame(frame)[v];
      if (mu <= 0) continue;
      const double sd = std::sqrt(mu / exposure);
      const double z = (noisy.image.frame(frame)[v] - mu) / sd;
      bias += z;
      z2 += z * z;
      ++n;
    }
  }
  // Standardised residuals: mean 0, variance 1.
  EXPECT_NEAR(bias / n, 0.0, 5.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(z2 / n, 1.0, 0.05);
}

TEST(Phantom, RenderingIsDeterministicPerSeed) {
  DatasetOptions o;
  o.count = 2;
  o.seed = 17;
  const auto a = simulate_subject(o, 1), b = simulate_subject(o, 1), c = simulate_subject(o, 0);
  EXPECT_EQ(a.sample.image.voxels, b.sample.image.voxels);
  EXPECT_EQ(a.sample.aif.values, b.sample.aif.values);
  EXPECT_NE(a.sample.image.voxels, c.sample.image.voxels);
}

TEST(Phantom, DatasetUsesStandardSchedule) {
  DatasetOptions o;
  o.count = 2;
  const auto d = simulate_dataset(o);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].image.frame_count(), 42u);
  EXPECT_DOUBLE_EQ(d[0].image.schedule.end_s(), 2730.0);
  EXPECT_EQ(d[0].aif.size(), 42u);
}

TEST(Suv, ConvertsConcentrationByDosePerWeight) {
  EXPECT_NEAR(to_suv(1.0, 16.2, 22.5), 1.3889, 1e-4);
  EXPECT_THROW(to_suv(1.0, 0.0, 22.5), ConfigError);
}

TEST(DetectorTrace, DelayedScaledCurveAndWindowedSamples) {
  const auto p = classic(30.0);
  DetectorTraceOptions o;
  o.delay_s = 25.0;
  o.scale = 3.0;
  o.manual_sample_times_s = {300.0, 900.0};
  const auto sim = simulate_detector_trace(p, o);
  EXPECT_EQ(sim.trace.values.size(), 2791u);
  EXPECT_NEAR(sim.trace.values[125], 3.0 * feng_aif(100.0, p), 1e-9);
  ASSERT_EQ(sim.samples.size(), 2u);
  EXPECT_NEAR(sim.samples[1].value, simpson([&](double x) { return feng_aif(x, p); }, 900, 930, 600) / 30.0, 1e-8);
  o.manual_sample_times_s = {2750.0};
  EXPECT_THROW(simulate_detector_trace(p, o), ConfigError);
}
