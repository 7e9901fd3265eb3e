#include "fcdlif/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "fcdlif/error.hpp"
#include "fcdlif/sampled_curve.hpp"

namespace fcdlif {
namespace {

double uniform(std::mt19937_64& rng, const std::array<double, 2>& range) {
  return std::uniform_real_distribution<double>(range[0], range[1])(rng);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Antiderivative of Cp in tau (tau >= 0).
double feng_antiderivative(double tau, const FengParams& p) {
  const double e1 = std::exp(p.lambda1 * tau);
  return p.a1 * e1 * (tau / p.lambda1 - 1.0 / (p.lambda1 * p.lambda1)) - (p.a2 + p.a3) * e1 / p.lambda1 +
         p.a2 * std::exp(p.lambda2 * tau) / p.lambda2 + p.a3 * std::exp(p.lambda3 * tau) / p.lambda3;
}

}  // namespace

FengParams FengParams::per_minute(double a1, double a2, double a3, double l1, double l2, double l3, double t0_s) {
  return FengParams{a1 / 60.0, a2, a3, l1 / 60.0, l2 / 60.0, l3 / 60.0, t0_s};
}

void FengParams::validate() const {
  if (!(lambda1 < lambda2 && lambda2 < lambda3 && lambda3 < 0.0)) {
    throw ConfigError("Feng parameters require lambda1 < lambda2 < lambda3 < 0");
  }
  if (a1 < 0.0 || a2 < 0.0 || a3 < 0.0) throw ConfigError("Feng amplitudes must be non-negative");
}

double feng_aif(double t_s, const FengParams& p) {
  p.validate();
  if (t_s <= p.t0_s) return 0.0;
  const double tau = t_s - p.t0_s;
  return (p.a1 * tau - p.a2 - p.a3) * std::exp(p.lambda1 * tau) + p.a2 * std::exp(p.lambda2 * tau) +
         p.a3 * std::exp(p.lambda3 * tau);
}

double feng_integral(double from_s, double to_s, const FengParams& p) {
  p.validate();
  if (to_s < from_s) return -feng_integral(to_s, from_s, p);
  const double ta = std::max(0.0, from_s - p.t0_s);
  const double tb = std::max(0.0, to_s - p.t0_s);
  return feng_antiderivative(tb, p) - feng_antiderivative(ta, p);
}

void KineticParams::validate() const {
  if (k1 < 0.0 || k2 < 0.0 || k3 < 0.0) throw ConfigError("kinetic rates must be non-negative");
  if (!(k2 + k3 > 0.0)) throw NumericError("singular compartment model: k2 + k3 = 0");
  if (vb < 0.0 || vb > 1.0) throw ConfigError("blood volume fraction must lie in [0, 1]");
}

std::vector<double> tissue_tac(std::span<const double> times_s, const KineticParams& kp, std::span<const double> cp) {
  kp.validate();
  if (times_s.size() != cp.size()) throw DimensionError("tissue_tac: time grid and plasma curve differ in length");
  for (std::size_t i = 1; i < times_s.size(); ++i) {
    const double dt = times_s[i] - times_s[i - 1];
    if (!(dt > 0.0) || dt > 0.5 + 1e-12) {
      throw ConfigError("tissue_tac: fine grid step must be in (0, 0.5] s, got " + std::to_string(dt));
    }
  }
  // Rates are per minute; the grid is in seconds.
  const double k1 = kp.k1 / 60.0;
  const double k = (kp.k2 + kp.k3) / 60.0;
  const double trapped_fraction = kp.k3 / (kp.k2 + kp.k3);
  const double free_fraction = kp.k2 / (kp.k2 + kp.k3);

  std::vector<double> out(cp.size());
  double integral = 0.0;  // int_0^t Cp
  double conv = 0.0;      // int_0^t e^{-k(t-s)} Cp(s) ds
  for (std::size_t i = 0; i < cp.size(); ++i) {
    if (i > 0) {
      const double dt = times_s[i] - times_s[i - 1];
      const double decay = std::exp(-k * dt);
      integral += 0.5 * dt * (cp[i - 1] + cp[i]);
      conv = decay * conv + 0.5 * dt * (decay * cp[i - 1] + cp[i]);
    }
    const double tissue = k1 * (trapped_fraction * integral + free_fraction * conv);
    out[i] = (1.0 - kp.vb) * tissue + kp.vb * cp[i];
  }
  return out;
}

bool Ellipsoid::contains(const std::array<double, 3>& point_mm) const {
  double r = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = (point_mm[a] - center_mm[a]) / radii_mm[a];
    r += d * d;
  }
  return r <= 1.0;
}

std::vector<int> Phantom::label_map() const {
  std::vector<int> labels(grid.numel(), -1);
  for (std::size_t x = 0; x < grid.x; ++x)
    for (std::size_t y = 0; y < grid.y; ++y)
      for (std::size_t z = 0; z < grid.z; ++z) {
        const std::array<double, 3> p{(static_cast<double>(x) + 0.5) * voxel_size_mm[0],
                                      (static_cast<double>(y) + 0.5) * voxel_size_mm[1],
                                      (static_cast<double>(z) + 0.5) * voxel_size_mm[2]};
        int label = -1;
        for (std::size_t r = 0; r < regions.size(); ++r) {
          if (regions[r].shape.contains(p)) label = static_cast<int>(r);
        }
        labels[(x * grid.y + y) * grid.z + z] = label;
      }
  return labels;
}

Phantom mouse_phantom(Extent3 grid, std::array<double, 3> voxel_size_mm) {
  Phantom ph;
  ph.grid = grid;
  ph.voxel_size_mm = voxel_size_mm;
  const std::array<double, 3> fov{static_cast<double>(grid.x) * voxel_size_mm[0],
                                  static_cast<double>(grid.y) * voxel_size_mm[1],
                                  static_cast<double>(grid.z) * voxel_size_mm[2]};
  // Centres and radii as fractions of the field of view (x = body axis).
  auto region = [&](std::string name, std::array<double, 3> c, std::array<double, 3> r, KineticParams kp,
                    bool blood = false) {
    Ellipsoid e;
    for (int a = 0; a < 3; ++a) {
      e.center_mm[a] = c[a] * fov[a];
      e.radii_mm[a] = r[a] * fov[a];
    }
    ph.regions.push_back({std::move(name), e, kp, blood});
  };
  region("brain", {0.14, 0.50, 0.55}, {0.11, 0.19, 0.15}, {0.20, 0.40, 0.08, 0.04});
  region("heart_wall", {0.37, 0.50, 0.46}, {0.12, 0.20, 0.20}, {0.60, 0.80, 0.30, 0.15});
  region("liver", {0.58, 0.46, 0.46}, {0.12, 0.26, 0.20}, {0.80, 0.90, 0.01, 0.20});
  region("bladder", {0.86, 0.50, 0.42}, {0.07, 0.13, 0.13}, {0.03, 0.00, 0.40, 0.00});
  region("blood_pool", {0.37, 0.50, 0.46}, {0.075, 0.13, 0.13}, {0.0, 1.0, 0.0, 1.0}, true);
  return ph;
}

Phantom randomize_phantom(const Phantom& base, const PhantomVariability& var, std::mt19937_64& rng) {
  Phantom ph = base;
  const std::array<double, 2> jitter{1.0 - var.kinetic_jitter, 1.0 + var.kinetic_jitter};
  const std::array<double, 2> shift{-var.position_jitter_mm, var.position_jitter_mm};
  for (auto& r : ph.regions) {
    for (auto& c : r.shape.center_mm) c += uniform(rng, shift);
    if (r.blood_pool) continue;
    r.kinetics.k1 *= uniform(rng, jitter);
    r.kinetics.k2 *= uniform(rng, jitter);
    r.kinetics.k3 *= uniform(rng, jitter);
  }
  return ph;
}

FengParams random_feng(const PhantomVariability& var, std::mt19937_64& rng) {
  const double a1 = uniform(rng, var.a1_per_min);
  const double a2 = uniform(rng, var.a2);
  const double a3 = uniform(rng, var.a3);
  const double l1 = uniform(rng, var.lambda1_per_min);
  const double l2 = uniform(rng, var.lambda2_per_min);
  const double l3 = uniform(rng, var.lambda3_per_min);
  const double t0 = uniform(rng, var.t0_s);
  return FengParams::per_minute(a1, a2, a3, l1, l2, l3, t0);
}

RenderedSample render_phantom(const Phantom& phantom, const FrameSchedule& schedule, const FengParams& feng,
                              std::uint64_t seed, double count_scale, double fine_step_s) {
  feng.validate();
  if (schedule.empty()) throw ConfigError("render_phantom: empty frame schedule");
  if (!(count_scale > 0.0)) throw ConfigError("render_phantom: count_scale must be positive");
  if (!(fine_step_s > 0.0) || fine_step_s > 0.5) throw ConfigError("render_phantom: fine step must be in (0, 0.5] s");
  if (schedule.start_s() < 0.0) throw ConfigError("render_phantom: frames must start at or after t = 0");

  const auto labels = phantom.label_map();
  int blood = -1;
  for (std::size_t r = 0; r < phantom.regions.size(); ++r) {
    if (phantom.regions[r].blood_pool) blood = static_cast<int>(r);
  }
  if (blood < 0 || std::find(labels.begin(), labels.end(), blood) == labels.end()) {
    throw ConfigError("render_phantom: the phantom has no blood-pool voxels");
  }

  const double end = schedule.end_s();
  const auto steps = static_cast<std::size_t>(std::ceil(end / fine_step_s - 1e-9));
  const double dt = end / static_cast<double>(steps);
  std::vector<double> times(steps + 1), cp(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    times[i] = dt * static_cast<double>(i);
    cp[i] = feng_aif(times[i], feng);
  }

  const std::size_t frames = schedule.size();
  std::vector<double> aif(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    aif[t] = feng_integral(schedule[t].start_s, schedule[t].end_s(), feng) / schedule[t].duration_s;
  }

  // Frame-averaged curve per region.
  std::vector<std::vector<double>> region_frames(phantom.regions.size());
  for (std::size_t r = 0; r < phantom.regions.size(); ++r) {
    if (static_cast<int>(r) == blood) {
      region_frames[r] = aif;
      continue;
    }
    const SampledCurve tac(0.0, dt, tissue_tac(times, phantom.regions[r].kinetics, cp));
    region_frames[r].resize(frames);
    for (std::size_t t = 0; t < frames; ++t) region_frames[r][t] = tac.average(schedule[t].start_s, schedule[t].end_s());
  }

  RenderedSample out;
  out.image = DynamicPetImage(schedule, phantom.grid, phantom.voxel_size_mm);
  out.image.metadata = {{"tracer", "FDG-synthetic"},
                        {"seed", std::to_string(seed)},
                        {"dose_MBq", "16.2"},
                        {"weight_g", "22.5"},
                        {"count_scale", std::isinf(count_scale) ? "inf" : format_double(count_scale)}};
  std::mt19937_64 rng(seed);
  const std::size_t n = phantom.grid.numel();
  for (std::size_t t = 0; t < frames; ++t) {
    auto frame = out.image.frame(t);
    const double exposure = schedule[t].duration_s * count_scale;
    for (std::size_t v = 0; v < n; ++v) {
      if (labels[v] < 0) continue;
      double value = region_frames[static_cast<std::size_t>(labels[v])][t];
      if (!std::isinf(count_scale) && value > 0.0) {
        std::poisson_distribution<long long> counts(value * exposure);
        value = static_cast<double>(counts(rng)) / exposure;
      }
      frame[v] = static_cast<float>(value);
    }
  }
  out.aif = make_input_function(schedule, std::move(aif));
  return out;
}

double to_suv(double value_mbq_per_ml, double injected_dose_mbq, double body_weight_g) {
  if (!(injected_dose_mbq > 0.0)) throw ConfigError("to_suv: injected dose must be positive");
  if (!(body_weight_g > 0.0)) throw ConfigError("to_suv: body weight must be positive");
  return value_mbq_per_ml / (injected_dose_mbq / body_weight_g);
}

SyntheticSubject simulate_subject(const DatasetOptions& options, std::size_t index) {
  std::mt19937_64 rng(derive_seed(options.seed, index, 0));
  const std::array<double, 3> voxel{options.voxel_size_mm, options.voxel_size_mm, options.voxel_size_mm};
  SyntheticSubject s;
  s.phantom = randomize_phantom(mouse_phantom(options.grid, voxel), options.variability, rng);
  s.feng = random_feng(options.variability, rng);
  s.sample = render_phantom(s.phantom, options.schedule, s.feng, derive_seed(options.seed, index, 1), options.count_scale);
  return s;
}

std::vector<RenderedSample> simulate_dataset(const DatasetOptions& options) {
  std::vector<RenderedSample> out;
  out.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) out.push_back(simulate_subject(options, i).sample);
  return out;
}

DetectorSimulation simulate_detector_trace(const FengParams& feng, const DetectorTraceOptions& options) {
  feng.validate();
  if (!(options.duration_s >= 1.0)) throw ConfigError("detector trace: duration must be at least 1 s");
  if (options.delay_s < 0.0 || options.delay_s >= options.duration_s) {
    throw ConfigError("detector trace: delay must lie in [0, trace span)");
  }
  const auto n = static_cast<std::size_t>(std::floor(options.duration_s)) + 1;
  DetectorSimulation sim;
  auto& trace = sim.trace;
  trace.start_s = 0.0;
  trace.true_delay_s = options.delay_s;
  trace.true_scale = options.scale;
  trace.withdrawal_rate_ul_per_min = options.withdrawal_rate_ul_per_min;
  trace.values.resize(n);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = trace.time(i);
    double v = options.scale * feng_aif(t - options.delay_s, feng);
    if (options.noise_sd > 0.0) v += options.noise_sd * noise(rng);
    trace.values[i] = v;
  }
  const double usable_end = trace.end_s() - options.delay_s;
  for (std::size_t i = 0; i < options.manual_sample_times_s.size(); ++i) {
    const double start = options.manual_sample_times_s[i];
    if (start < 0.0 || start + ManualSample::kWindow > usable_end) {
      throw ConfigError("detector trace: manual sample " + std::to_string(i) + " window [" + std::to_string(start) +
                        ", +30 s) falls outside the delay-corrected trace");
    }
    double value = feng_integral(start, start + ManualSample::kWindow, feng) / ManualSample::kWindow;
    if (options.outlier && options.outlier->first == i) value *= options.outlier->second;
    sim.samples.push_back({start, value});
  }
  return sim;
}

}  // namespace fcdlif
