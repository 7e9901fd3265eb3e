#pragma once

#include <span>
#include <vector>

#include "fcdlif/image.hpp"
#include "fcdlif/trace.hpp"

namespace fcdlif {

// Resamples the trace at times shifted by `offset_s`: the value recorded at
// t appears at t - offset_s. Sub-second offsets use linear interpolation;
// only grid points covered by the original span are kept.
ContinuousDetectorTrace shift_trace(const ContinuousDetectorTrace& trace, double offset_s);

// Aligns detector time with injection-site time. Requires 0 <= delay < span.
ContinuousDetectorTrace delay_correct(const ContinuousDetectorTrace& trace, double delay_s);

struct CalibrationFactors {
  std::vector<double> factors;  // detector / blood, NaN where unusable
  std::vector<bool> usable;     // false for zero-valued manual samples
};

// factor_i = mean of the interpolated trace over [start_i, start_i + 30 s)
// divided by the manual value. The trace must already be delay-corrected.
CalibrationFactors calibration_factors(const ContinuousDetectorTrace& trace, std::span<const ManualSample> samples);

// Keeps values within 3 scaled MADs (1.4826 * MAD) of the median. When the
// scaled MAD is zero only values equal to the median are kept.
std::vector<bool> mad_outlier_filter(std::span<const double> values);

struct CalibrationResult {
  std::vector<double> factors;
  std::vector<bool> included;
  double overall_factor = 0.0;  // mean of the included factors
  double delay_s = 0.0;
};

// delay_correct -> calibration_factors -> mad_outlier_filter -> mean.
CalibrationResult calibrate(const ContinuousDetectorTrace& trace, std::span<const ManualSample> samples, double delay_s);

// Detector units -> blood SUV: divides by the overall factor.
ContinuousDetectorTrace apply_calibration(const ContinuousDetectorTrace& trace, const CalibrationResult& result);

// Time-average of the interpolated trace over every frame.
InputFunction resample_to_frames(const ContinuousDetectorTrace& trace, const FrameSchedule& schedule);

}  // namespace fcdlif
