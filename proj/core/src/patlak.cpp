#include "fcdlif/patlak.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fcdlif/error.hpp"

namespace fcdlif {
namespace {

struct PlasmaAxis {
  std::vector<double> x;      // (int C_p) / C_p, minutes
  std::vector<double> inv_cp;
};

PlasmaAxis plasma_axis(std::span<const double> plasma, const FrameSchedule& schedule, const FitWindow& window) {
  if (plasma.size() != schedule.size()) {
    throw DimensionError("patlak: input function has " + std::to_string(plasma.size()) + " frames, schedule has " +
                         std::to_string(schedule.size()));
  }
  if (window.count < 2) throw ConfigError("patlak: fit window needs at least 2 frames");
  if (window.end() > schedule.size()) throw ConfigError("patlak: fit window extends past the last frame");
  const auto mids = schedule.mid_times();
  PlasmaAxis axis;
  double integral = plasma[0] * mids[0] / 60.0;
  for (std::size_t t = 0; t < window.end(); ++t) {
    if (t > 0) integral += 0.5 * (plasma[t] + plasma[t - 1]) * (mids[t] - mids[t - 1]) / 60.0;
    if (t < window.first) continue;
    if (!(plasma[t] > 0.0)) {
      throw NumericError("patlak: input function is not positive at frame " + std::to_string(t));
    }
    axis.x.push_back(integral / plasma[t]);
    axis.inv_cp.push_back(1.0 / plasma[t]);
  }
  return axis;
}

PatlakResult fit(const PlasmaAxis& axis, std::span<const double> tissue, const FitWindow& window) {
  const std::size_t n = axis.x.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = tissue[window.first + i] * axis.inv_cp[i];
  const double mx = std::accumulate(axis.x.begin(), axis.x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (axis.x[i] - mx) * (axis.x[i] - mx);
    sxy += (axis.x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericError("patlak: Patlak abscissa is constant over the fit window");
  PatlakResult r;
  r.ki = sxy / sxx;
  r.intercept = my - r.ki * mx;
  r.window = window;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.ki * axis.x[i]);
    ss += e * e;
  }
  r.residual_norm = std::sqrt(ss);
  return r;
}

std::vector<std::size_t> sample_voxels(std::size_t total, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (count == 0 || count >= total) return all;
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, std::mt19937_64(seed));
  return picked;
}

}  // namespace

FitWindow FitWindow::last_frames(std::size_t total, std::size_t frames) {
  if (frames > total) throw ConfigError("fit window of " + std::to_string(frames) + " frames exceeds " +
                                        std::to_string(total) + " frames");
  return {total - frames, frames};
}

PatlakResult patlak_ki(std::span<const double> tissue, std::span<const double> plasma, const FrameSchedule& schedule,
                       const FitWindow& window) {
  if (tissue.size() != schedule.size()) {
    throw DimensionError("patlak: tissue curve has " + std::to_string(tissue.size()) + " frames, schedule has " +
                         std::to_string(schedule.size()));
  }
  return fit(plasma_axis(plasma, schedule, window), tissue, window);
}

VoxelwisePatlak voxelwise_patlak(const DynamicPetImage& image, std::span<const double> plasma,
                                 const FitWindow& window, std::size_t sample_count, std::uint64_t seed) {
  const auto axis = plasma_axis(plasma, image.schedule, window);
  const std::size_t voxels = image.shape.numel();
  VoxelwisePatlak out;
  out.sampled = sample_voxels(voxels, sample_count, seed);
  out.ki.reserve(out.sampled.size());
  out.intercept.reserve(out.sampled.size());
  std::vector<double> curve(image.frame_count());
  for (const auto v : out.sampled) {
    for (std::size_t t = 0; t < curve.size(); ++t) curve[t] = image.voxels[t * voxels + v];
    const auto r = fit(axis, curve, window);
    out.ki.push_back(r.ki);
    out.intercept.push_back(r.intercept);
  }
  return out;
}

std::vector<KiPair> ki_scatter(const DynamicPetImage& image, std::span<const double> reference,
                               std::span<const double> predicted, const FitWindow& window, std::size_t sample_count,
                               std::uint64_t seed) {
  const auto ref_axis = plasma_axis(reference, image.schedule, window);
  const auto pred_axis = plasma_axis(predicted, image.schedule, window);
  const std::size_t voxels = image.shape.numel();
  std::vector<KiPair> out;
  std::vector<double> curve(image.frame_count());
  for (const auto v : sample_voxels(voxels, sample_count, seed)) {
    for (std::size_t t = 0; t < curve.size(); ++t) curve[t] = image.voxels[t * voxels + v];
    out.push_back({v, fit(ref_axis, curve, window).ki, fit(pred_axis, curve, window).ki});
  }
  return out;
}

}  // namespace fcdlif
