#pragma once

#include <cstddef>
#include <vector>

namespace fcdlif {

// Arterial-line detector signal sampled at exactly 1 Hz.
struct ContinuousDetectorTrace {
  double start_s = 0.0;
  std::vector<double> values;  // arbitrary detector units
  // Acquisition metadata. The delay and scale are ground truth for simulated
  // traces; the withdrawal rate is stored but not used downstream.
  double true_delay_s = 0.0;
  double true_scale = 1.0;
  double withdrawal_rate_ul_per_min = 0.0;

  static constexpr double kSampleSpacing = 1.0;

  double time(std::size_t i) const { return start_s + static_cast<double>(i) * kSampleSpacing; }
  double end_s() const { return time(values.size() - 1); }
};

// Manual blood sample: activity averaged over [start_s, start_s + 30 s).
struct ManualSample {
  static constexpr double kWindow = 30.0;

  double start_s = 0.0;
  double value = 0.0;
};

}  // namespace fcdlif
