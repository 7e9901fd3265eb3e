#include "fcdlif/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcdlif/error.hpp"
#include "fcdlif/training.hpp"

namespace fcdlif {
namespace {

std::size_t receptive_radius(const InputFunctionModel& model) {
  // The baseline head sees every frame; give it no interior.
  if (model.kind() == ModelKind::baseline) return std::numeric_limits<std::size_t>::max() / 2;
  return model.config().tfe.receptive_radius();
}

// Compares modified[i + mo] with reference[i + ro] over `count` positions.
// Position i is interior when both runs have `radius` real frames on each side
// of it that map onto the same image frames.
void compare(AlignmentReport& r, std::size_t count, std::size_t interior_first, std::size_t interior_end) {
  r.deviation.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    r.deviation[i] = r.modified[i + r.modified_offset] - r.reference[i + r.reference_offset];
    r.overall_max_deviation = std::max(r.overall_max_deviation, std::abs(r.deviation[i]));
  }
  if (interior_end > interior_first) {
    r.interior_first = interior_first;
    r.interior_count = interior_end - interior_first;
    for (std::size_t i = interior_first; i < interior_end; ++i) {
      r.interior_max_deviation = std::max(r.interior_max_deviation, std::abs(r.deviation[i]));
    }
  }
}

}  // namespace

AlignmentReport shift_test(const InputFunctionModel& model, const DynamicPetImage& image,
                           const std::optional<InputFunction>& truth) {
  if (image.frame_count() < 1) throw ConfigError("shift_test: image has no frames");
  AlignmentReport r;
  r.reference = predict(model, image).values;
  r.reference_offset = 0;
  r.modified_offset = 1;
  const auto shifted_image = prepend_first_frame(image);
  try {
    r.modified = predict(model, shifted_image).values;
  } catch (const FixedLengthError& e) {
    r.error = e.what();
    return r;
  }
  const std::size_t t = image.frame_count();
  const std::size_t radius = receptive_radius(model);
  // Original position i needs frames [i - R, i + R] inside [0, T).
  const std::size_t end = t > radius ? t - radius : 0;
  compare(r, t, std::min(radius, end), end);
  if (truth) {
    // The duplicated frame has no truth of its own; score the aligned frames.
    std::vector<double> aligned(r.modified.begin() + 1, r.modified.end());
    r.wmse_vs_truth = weighted_mse(aligned, truth->values, LossWeights::for_length(aligned.size()));
  }
  return r;
}

AlignmentReport truncation_test(const InputFunctionModel& model, const DynamicPetImage& image,
                                const std::optional<InputFunction>& truth, std::size_t front, std::size_t back) {
  const std::size_t t = image.frame_count();
  if (t <= front + back) {
    throw ConfigError("truncation_test: " + std::to_string(t) + " frames cannot lose " + std::to_string(front) +
                      " leading and " + std::to_string(back) + " trailing frames");
  }
  AlignmentReport r;
  r.reference = predict(model, image).values;
  r.reference_offset = front;
  r.modified_offset = 0;
  try {
    r.modified = predict(model, drop_frames(image, front, back)).values;
  } catch (const FixedLengthError& e) {
    r.error = e.what();
    return r;
  }
  const std::size_t kept = t - front - back;
  const std::size_t radius = receptive_radius(model);
  // Truncated position i needs frames [i - R, i + R] inside [0, kept).
  const std::size_t end = kept > radius ? kept - radius : 0;
  compare(r, kept, std::min(radius, end), end);
  if (truth) {
    const auto cut = drop_frames(*truth, front, back);
    r.wmse_vs_truth = weighted_mse(r.modified, cut.values, LossWeights::for_length(kept));
  }
  return r;
}

}  // namespace fcdlif
