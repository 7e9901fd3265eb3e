#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fcdlif/image.hpp"

namespace fcdlif {

// Half-open frame range [first, first + count).
struct FitWindow {
  std::size_t first = 0;
  std::size_t count = 0;

  std::size_t end() const { return first + count; }
  // The last `frames` frames of a `total`-frame schedule.
  static FitWindow last_frames(std::size_t total, std::size_t frames = 8);
};

struct PatlakResult {
  double ki = 0.0;         // 1/min
  double intercept = 0.0;  // distribution volume V
  FitWindow window;
  double residual_norm = 0.0;
};

// Graphical Patlak analysis: OLS of C_T/C_p against (int_0^t C_p)/C_p over the
// fit window. Times are frame mid-times in minutes; the plasma integral is a
// trapezoid over mid-times, with C_p held at its first value from 0 to the
// first mid-time.
PatlakResult patlak_ki(std::span<const double> tissue, std::span<const double> plasma, const FrameSchedule& schedule,
                       const FitWindow& window);

struct VoxelwisePatlak {
  std::vector<double> ki;         // aligned with `sampled`
  std::vector<double> intercept;  // aligned with `sampled`
  std::vector<std::size_t> sampled;  // ascending voxel indices
};

// Patlak per voxel. `sample_count` voxels are drawn uniformly without
// replacement (all voxels when sample_count is 0 or exceeds the grid).
VoxelwisePatlak voxelwise_patlak(const DynamicPetImage& image, std::span<const double> plasma,
                                 const FitWindow& window, std::size_t sample_count = 0, std::uint64_t seed = 0);

struct KiPair {
  std::size_t voxel = 0;
  double ki_reference = 0.0;
  double ki_predicted = 0.0;
};

// Ki from the measured and the predicted input function on the same sampled voxels.
std::vector<KiPair> ki_scatter(const DynamicPetImage& image, std::span<const double> reference,
                               std::span<const double> predicted, const FitWindow& window, std::size_t sample_count,
                               std::uint64_t seed);

}  // namespace fcdlif
