#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fcdlif/image.hpp"
#include "fcdlif/model.hpp"

namespace fcdlif {

// Per-position comparison of two predictions of the same underlying frames.
struct AlignmentReport {
  std::vector<double> reference;  // prediction on the unmodified image
  std::vector<double> modified;   // prediction on the shifted / truncated image
  // deviation[i] = modified[i + modified_offset] - reference[i + reference_offset]
  std::vector<double> deviation;
  std::size_t reference_offset = 0;
  std::size_t modified_offset = 0;
  // Overlap positions (indices into `deviation`) whose inputs see no padding
  // in either run.
  std::size_t interior_first = 0;
  std::size_t interior_count = 0;
  double interior_max_deviation = 0.0;
  double overall_max_deviation = 0.0;
  // Set when the model rejects the modified input (fixed-length models).
  std::optional<std::string> error;
  // wMSE of the modified prediction against the matching truth frames.
  std::optional<double> wmse_vs_truth;
};

// Runs the model on the image and on a copy with frame 0 duplicated in front.
AlignmentReport shift_test(const InputFunctionModel& model, const DynamicPetImage& image,
                           const std::optional<InputFunction>& truth = std::nullopt);

// Runs the model on the image and on a copy without the first `front` and last
// `back` frames.
AlignmentReport truncation_test(const InputFunctionModel& model, const DynamicPetImage& image,
                                const std::optional<InputFunction>& truth = std::nullopt, std::size_t front = 4,
                                std::size_t back = 6);

}  // namespace fcdlif
