#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fcdlif/image.hpp"
#include "fcdlif/random.hpp"
#include "fcdlif/trace.hpp"

namespace fcdlif {

// Tri-exponential bolus input function. Amplitudes in SUV (a1 in SUV/s),
// rates in 1/s, injection time t0 in s.
//   Cp(t) = (a1*tau - a2 - a3) e^{l1 tau} + a2 e^{l2 tau} + a3 e^{l3 tau}, tau = t - t0
struct FengParams {
  double a1 = 851.1 / 60.0;
  double a2 = 21.9;
  double a3 = 20.8;
  double lambda1 = -4.13 / 60.0;
  double lambda2 = -0.12 / 60.0;
  double lambda3 = -0.01 / 60.0;
  double t0_s = 0.0;

  // Same curve with a1 given per minute and rates per minute.
  static FengParams per_minute(double a1, double a2, double a3, double l1, double l2, double l3, double t0_s = 0.0);

  // Requires lambda1 < lambda2 < lambda3 < 0.
  void validate() const;
};

double feng_aif(double t_s, const FengParams& p);
// Closed-form integral of Cp over [from_s, to_s].
double feng_integral(double from_s, double to_s, const FengParams& p);

// Irreversible two-tissue compartment rates (per minute) and blood fraction.
struct KineticParams {
  double k1 = 0.1;  // ml/g/min
  double k2 = 0.2;  // 1/min
  double k3 = 0.05;
  double vb = 0.0;

  double ki() const { return k1 * k3 / (k2 + k3); }
  void validate() const;
};

// Tissue curve on the grid `times_s` (uniform-or-finer, step <= 0.5 s, from
// the injection clock origin) given plasma samples on the same grid.
std::vector<double> tissue_tac(std::span<const double> times_s, const KineticParams& kp, std::span<const double> cp);

struct Ellipsoid {
  std::array<double, 3> center_mm{};
  std::array<double, 3> radii_mm{};

  bool contains(const std::array<double, 3>& point_mm) const;
};

struct PhantomRegion {
  std::string name;
  Ellipsoid shape;
  KineticParams kinetics;
  bool blood_pool = false;
};

// Regions are painted in order: a voxel takes the label of the last region
// containing its centre. Label -1 is background (no activity).
struct Phantom {
  Extent3 grid{24, 16, 16};
  std::array<double, 3> voxel_size_mm{1.5, 1.5, 1.5};
  std::vector<PhantomRegion> regions;

  std::vector<int> label_map() const;
};

// Ranges (uniform, inclusive) used to randomise synthetic subjects.
struct PhantomVariability {
  double kinetic_jitter = 0.2;    // multiplicative +-20% on K1, k2, k3
  double position_jitter_mm = 0.75;
  std::array<double, 2> a1_per_min{300.0, 700.0};
  std::array<double, 2> a2{5.0, 15.0};
  std::array<double, 2> a3{1.0, 3.0};
  std::array<double, 2> lambda1_per_min{-6.0, -3.0};
  std::array<double, 2> lambda2_per_min{-0.8, -0.3};
  std::array<double, 2> lambda3_per_min{-0.03, -0.005};
  std::array<double, 2> t0_s{28.0, 34.0};
};

// Brain, heart wall, liver and bladder tissue plus a left-ventricle blood pool,
// laid out relative to the field of view so any grid size works.
Phantom mouse_phantom(Extent3 grid, std::array<double, 3> voxel_size_mm = {1.5, 1.5, 1.5});
Phantom randomize_phantom(const Phantom& base, const PhantomVariability& var, std::mt19937_64& rng);
FengParams random_feng(const PhantomVariability& var, std::mt19937_64& rng);

struct RenderedSample {
  DynamicPetImage image;
  InputFunction aif;  // noiseless frame-averaged Cp
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

// Frame-averaged region curves with Poisson count noise
// (expected counts = value * duration * count_scale); count_scale = kNoiseless
// disables noise.
RenderedSample render_phantom(const Phantom& phantom, const FrameSchedule& schedule, const FengParams& feng,
                              std::uint64_t seed, double count_scale, double fine_step_s = 0.5);

// Concentration (MBq/ml) -> SUV (g/ml).
double to_suv(double value_mbq_per_ml, double injected_dose_mbq, double body_weight_g);

struct DatasetOptions {
  std::size_t count = 20;
  Extent3 grid{24, 16, 16};
  double voxel_size_mm = 1.5;
  FrameSchedule schedule = FrameSchedule::standard();
  double count_scale = 10.0;
  std::uint64_t seed = 0;
  PhantomVariability variability{};
};

struct SyntheticSubject {
  RenderedSample sample;
  FengParams feng;
  Phantom phantom;
};

// Subject i depends only on (seed, i).
SyntheticSubject simulate_subject(const DatasetOptions& options, std::size_t index);
std::vector<RenderedSample> simulate_dataset(const DatasetOptions& options);

struct DetectorTraceOptions {
  double duration_s = 2790.0;
  double delay_s = 25.1;
  double scale = 1.0;
  double noise_sd = 0.0;
  std::vector<double> manual_sample_times_s;
  // Multiplies the value of one manual sample (index, factor).
  std::optional<std::pair<std::size_t, double>> outlier;
  double withdrawal_rate_ul_per_min = 105.6;
  std::uint64_t seed = 0;
};

struct DetectorSimulation {
  ContinuousDetectorTrace trace;
  std::vector<ManualSample> samples;
};

// trace(t) = scale * Cp(t - delay) + N(0, noise_sd) at 1 Hz; manual samples
// are exact 30 s averages of Cp at injection-site time.
DetectorSimulation simulate_detector_trace(const FengParams& feng, const DetectorTraceOptions& options);

}  // namespace fcdlif
