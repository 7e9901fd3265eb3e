#include <gtest/gtest.h>

#include <cmath>

#include "fcdlif/error.hpp"
#include "fcdlif/patlak.hpp"
#include "fcdlif/phantom.hpp"

using namespace fcdlif;

namespace {

FengParams classic() { return FengParams::per_minute(851.1, 21.9, 20.8, -4.13, -0.12, -0.01, 30.0); }
FengParams fast_washout() { return FengParams::per_minute(851.1, 21.9, 20.8, -4.13, -1.5, -0.01, 30.0); }

// One big cube per region, plus a blood pool, rendered without noise.
struct RegionCurves {
  std::vector<std::vector<double>> tissue;
  std::vector<double> plasma;
  FrameSchedule schedule;
};

RegionCurves render_regions(const std::vector<KineticParams>& kinetics, const FengParams& feng) {
  Phantom ph;
  ph.grid = {static_cast<std::size_t>(kinetics.size() + 1), 2, 2};
  ph.voxel_size_mm = {1.0, 1.0, 1.0};
  for (std::size_t r = 0; r <= kinetics.size(); ++r) {
    Ellipsoid e{{r + 0.5, 1.0, 1.0}, {0.45, 5.0, 5.0}};
    const bool blood = r == kinetics.size();
    ph.regions.push_back({"r" + std::to_string(r), e, blood ? KineticParams{} : kinetics[r], blood});
  }
  const auto s = render_phantom(ph, FrameSchedule::standard(), feng, 0, kNoiseless, 0.25);
  RegionCurves out;
  out.schedule = s.image.schedule;
  out.plasma = s.aif.values;
  for (std::size_t r = 0; r < kinetics.size(); ++r) out.tissue.push_back(s.image.voxel_curve(s.image.voxel_index(r, 0, 0)));
  return out;
}

}  // namespace

TEST(Patlak, ExactLinearDataWithConstantPlasma) {
  const auto sched = FrameSchedule::standard();
  const auto mids = sched.mid_times();
  std::vector<double> cp(42, 2.5), ct(42);
  for (std::size_t t = 0; t < 42; ++t) ct[t] = 0.037 * 2.5 * mids[t] / 60.0 + 0.4 * 2.5;
  for (const auto& w : {FitWindow::last_frames(42), FitWindow{10, 20}, FitWindow{40, 2}}) {
    const auto r = patlak_ki(ct, cp, sched, w);
    EXPECT_NEAR(r.ki, 0.037, 1e-12);
    EXPECT_NEAR(r.intercept, 0.4, 1e-10);
    EXPECT_NEAR(r.residual_norm, 0.0, 1e-10);
  }
}

TEST(Patlak, RecoversIrreversibleUptakeFromPhantom) {
  const std::vector<KineticParams> k{{0.1, 0.2, 0.05, 0.0}, {0.6, 0.8, 0.3, 0.0}, {0.2, 0.4, 0.08, 0.0},
                                     {0.3, 0.0, 0.2, 0.0}};
  const auto c = render_regions(k, classic());
  for (std::size_t r = 0; r < k.size(); ++r) {
    const auto res = patlak_ki(c.tissue[r], c.plasma, c.schedule, FitWindow::last_frames(42));
    EXPECT_NEAR(res.ki, k[r].ki(), 0.02 * k[r].ki()) << "region " << r;
  }
  EXPECT_NEAR(k[0].ki(), 0.02, 1e-15);
}

TEST(Patlak, BloodFractionScalesSlope) {
  const std::vector<KineticParams> k{{0.1, 0.2, 0.05, 0.0}, {0.1, 0.2, 0.05, 0.3}};
  const auto c = render_regions(k, classic());
  const auto w = FitWindow::last_frames(42);
  const double a = patlak_ki(c.tissue[0], c.plasma, c.schedule, w).ki;
  const double b = patlak_ki(c.tissue[1], c.plasma, c.schedule, w).ki;
  EXPECT_NEAR(b, 0.7 * a, 1e-6);
}

TEST(Patlak, ReversibleRegionsHaveNegligibleSlope) {
  // Reversible tissue approaches a constant tissue/plasma ratio once the free
  // compartment equilibrates; a fast-clearing input lets that happen in-scan.
  const std::vector<KineticParams> k{{0.8, 0.9, 0.0, 0.0}, {0.6, 0.8, 0.0, 0.0}, {0.2, 0.4, 0.0, 0.0}};
  const auto c = render_regions(k, fast_washout());
  for (std::size_t r = 0; r < k.size(); ++r) {
    const auto res = patlak_ki(c.tissue[r], c.plasma, c.schedule, FitWindow::last_frames(42, 6));
    EXPECT_LT(std::abs(res.ki), 1e-4) << "region " << r;
  }
}

TEST(Patlak, InvalidInputs) {
  const auto sched = FrameSchedule::standard();
  std::vector<double> cp(42, 1.0), ct(42, 1.0);
  EXPECT_THROW(patlak_ki(ct, cp, sched, {41, 1}), ConfigError);
  EXPECT_THROW(patlak_ki(ct, cp, sched, {40, 3}), ConfigError);
  EXPECT_THROW(FitWindow::last_frames(5, 8), ConfigError);
  cp[40] = 0.0;
  EXPECT_THROW(patlak_ki(ct, cp, sched, FitWindow::last_frames(42)), NumericError);
  EXPECT_THROW(patlak_ki(ct, std::vector<double>(41, 1.0), sched, FitWindow::last_frames(42)), DimensionError);
}

TEST(VoxelwisePatlak, SubsampleIsDeterministicAndMatchesFullMap) {
  const auto p = classic();
  const auto s = render_phantom(mouse_phantom({24, 16, 16}), FrameSchedule::standard(), p, 0, kNoiseless);
  std::vector<double> cp = s.aif.values;
  const auto w = FitWindow::last_frames(42);
  // Background voxels are zero everywhere and fit Ki = 0.
  const auto full = voxelwise_patlak(s.image, cp, w);
  ASSERT_EQ(full.ki.size(), s.image.shape.numel());
  ASSERT_EQ(full.sampled.size(), full.ki.size());
  const auto a = voxelwise_patlak(s.image, cp, w, 100, 3);
  const auto b = voxelwise_patlak(s.image, cp, w, 100, 3);
  ASSERT_EQ(a.sampled.size(), 100u);
  EXPECT_EQ(a.sampled, b.sampled);
  EXPECT_TRUE(std::is_sorted(a.sampled.begin(), a.sampled.end()));
  for (std::size_t i = 0; i < a.sampled.size(); ++i) EXPECT_DOUBLE_EQ(a.ki[i], full.ki[a.sampled[i]]);
}

TEST(KiScatter, IdenticalInputFunctionsGiveIdenticalKi) {
  const auto s = render_phantom(mouse_phantom({24, 16, 16}), FrameSchedule::standard(), classic(), 0, kNoiseless);
  const auto pairs = ki_scatter(s.image, s.aif.values, s.aif.values, FitWindow::last_frames(42), 50, 1);
  ASSERT_EQ(pairs.size(), 50u);
  for (const auto& p : pairs) EXPECT_EQ(p.ki_reference, p.ki_predicted);
  std::vector<double> doubled = s.aif.values;
  for (auto& v : doubled) v *= 2.0;
  // Scaling the input function by 2 halves every Ki.
  for (const auto& p : ki_scatter(s.image, s.aif.values, doubled, FitWindow::last_frames(42), 50, 1)) {
    EXPECT_NEAR(p.ki_predicted, 0.5 * p.ki_reference, 1e-9 + 1e-9 * std::abs(p.ki_reference));
  }
}
