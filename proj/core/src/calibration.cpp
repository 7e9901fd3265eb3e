#include "fcdlif/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fcdlif/error.hpp"
#include "fcdlif/log.hpp"
#include "fcdlif/sampled_curve.hpp"

namespace fcdlif {
namespace {

SampledCurve as_curve(const ContinuousDetectorTrace& trace) {
  return SampledCurve(trace.start_s, ContinuousDetectorTrace::kSampleSpacing, trace.values);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ContinuousDetectorTrace shift_trace(const ContinuousDetectorTrace& trace, double offset_s) {
  if (trace.values.size() < 2) throw DimensionError("shift_trace: trace needs at least two samples");
  const SampledCurve curve = as_curve(trace);
  // New grid keeps integer spacing; first point is the first t with t + offset >= start.
  const double first = std::ceil(trace.start_s - offset_s - 1e-9);
  const double last = std::floor(trace.end_s() - offset_s + 1e-9);
  if (last < first + 1.0) throw DimensionError("shift_trace: offset leaves fewer than two samples");
  ContinuousDetectorTrace out = trace;
  out.start_s = first;
  out.values.clear();
  for (double t = first; t <= last + 1e-9; t += 1.0) {
    const double src = std::clamp(t + offset_s, trace.start_s, trace.end_s());
    out.values.push_back(curve.at(src));
  }
  return out;
}

ContinuousDetectorTrace delay_correct(const ContinuousDetectorTrace& trace, double delay_s) {
  if (trace.values.empty()) throw DimensionError("delay_correct: empty trace");
  const double span = trace.end_s() - trace.start_s;
  if (!(delay_s >= 0.0) || delay_s >= span) {
    throw ConfigError("delay_correct: delay " + std::to_string(delay_s) + " s outside [0, " + std::to_string(span) + ")");
  }
  if (delay_s == 0.0) return trace;
  return shift_trace(trace, delay_s);
}

CalibrationFactors calibration_factors(const ContinuousDetectorTrace& trace, std::span<const ManualSample> samples) {
  const SampledCurve curve = as_curve(trace);
  CalibrationFactors out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const double end = s.start_s + ManualSample::kWindow;
    if (s.start_s < curve.start_s() || end > curve.end_s()) {
      throw CalibrationError("manual sample " + std::to_string(i) + " window [" + std::to_string(s.start_s) + ", " +
                             std::to_string(end) + ") is not covered by the trace");
    }
    if (s.value == 0.0) {
      log::warning("manual sample " + std::to_string(i) + " has value 0 and is excluded from calibration");
      out.factors.push_back(std::numeric_limits<double>::quiet_NaN());
      out.usable.push_back(false);
      continue;
    }
    out.factors.push_back(curve.average(s.start_s, end) / s.value);
    out.usable.push_back(true);
  }
  return out;
}

std::vector<bool> mad_outlier_filter(std::span<const double> values) {
  if (values.size() < 2) throw CalibrationError("mad_outlier_filter: need at least 2 values");
  const std::vector<double> v(values.begin(), values.end());
  const double med = median(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
  const double scaled_mad = 1.4826 * median(dev);
  std::vector<bool> keep(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    keep[i] = scaled_mad == 0.0 ? v[i] == med : dev[i] <= 3.0 * scaled_mad;
  }
  if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
    throw CalibrationError("mad_outlier_filter: every value was rejected");
  }
  return keep;
}

CalibrationResult calibrate(const ContinuousDetectorTrace& trace, std::span<const ManualSample> samples, double delay_s) {
  const auto corrected = delay_correct(trace, delay_s);
  const auto raw = calibration_factors(corrected, samples);

  std::vector<double> usable;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < raw.factors.size(); ++i) {
    if (raw.usable[i]) {
      usable.push_back(raw.factors[i]);
      index.push_back(i);
    }
  }
  if (usable.empty()) throw CalibrationError("calibration: no usable manual samples");

  CalibrationResult result;
  result.factors = raw.factors;
  result.included.assign(raw.factors.size(), false);
  result.delay_s = delay_s;
  // A single sample cannot be screened for outliers.
  const std::vector<bool> keep = usable.size() >= 2 ? mad_outlier_filter(usable) : std::vector<bool>{true};
  double total = 0.0;
  std::size_t kept = 0;
  for (std::size_t j = 0; j < usable.size(); ++j) {
    if (!keep[j]) continue;
    result.included[index[j]] = true;
    total += usable[j];
    ++kept;
  }
  result.overall_factor = total / static_cast<double>(kept);
  return result;
}

ContinuousDetectorTrace apply_calibration(const ContinuousDetectorTrace& trace, const CalibrationResult& result) {
  if (result.overall_factor == 0.0 || !std::isfinite(result.overall_factor)) {
    throw CalibrationError("apply_calibration: overall factor must be finite and non-zero");
  }
  ContinuousDetectorTrace out = trace;
  for (auto& v : out.values) v /= result.overall_factor;
  return out;
}

InputFunction resample_to_frames(const ContinuousDetectorTrace& trace, const FrameSchedule& schedule) {
  const SampledCurve curve = as_curve(trace);
  if (schedule.start_s() < curve.start_s() - 1e-9 || schedule.end_s() > curve.end_s() + 1e-9) {
    throw DimensionError("resample_to_frames: schedule [" + std::to_string(schedule.start_s()) + ", " +
                         std::to_string(schedule.end_s()) + "] s extends beyond the trace [" +
                         std::to_string(curve.start_s()) + ", " + std::to_string(curve.end_s()) + "] s");
  }
  std::vector<double> values(schedule.size());
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const double a = std::max(schedule[t].start_s, curve.start_s());
    const double b = std::min(schedule[t].end_s(), curve.end_s());
    values[t] = curve.average(a, b);
  }
  return make_input_function(schedule, std::move(values));
}

}  // namespace fcdlif
