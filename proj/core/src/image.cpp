#include "fcdlif/image.hpp"

#include <algorithm>
#include <cmath>

#include "fcdlif/error.hpp"

namespace fcdlif {

FrameSchedule::FrameSchedule(std::vector<Frame> frames) : frames_(std::move(frames)) {
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    const auto& f = frames_[i];
    if (!(f.duration_s > 0.0) || !std::isfinite(f.duration_s) || !std::isfinite(f.start_s)) {
      throw ConfigError("frame " + std::to_string(i) + " has a non-positive or non-finite duration");
    }
    if (i > 0) {
      const double gap = f.start_s - frames_[i - 1].end_s();
      if (std::abs(gap) > 1e-9 * std::max(1.0, std::abs(f.start_s))) {
        throw ConfigError("frame " + std::to_string(i) + " is not contiguous with its predecessor");
      }
    }
  }
}

FrameSchedule FrameSchedule::from_blocks(std::span<const std::pair<std::size_t, double>> blocks, double start_s) {
  std::vector<Frame> frames;
  double t = start_s;
  for (const auto& [count, duration] : blocks) {
    for (std::size_t i = 0; i < count; ++i) {
      frames.push_back({t, duration});
      t += duration;
    }
  }
  return FrameSchedule(std::move(frames));
}

FrameSchedule FrameSchedule::standard() {
  static const std::pair<std::size_t, double> kBlocks[] = {{1, 30.0}, {24, 5.0}, {9, 20.0}, {8, 300.0}};
  return from_blocks(kBlocks);
}

double FrameSchedule::start_s() const {
  if (frames_.empty()) throw ConfigError("empty frame schedule");
  return frames_.front().start_s;
}

double FrameSchedule::end_s() const {
  if (frames_.empty()) throw ConfigError("empty frame schedule");
  return frames_.back().end_s();
}

std::vector<double> FrameSchedule::mid_times() const {
  std::vector<double> mids;
  mids.reserve(frames_.size());
  for (const auto& f : frames_) mids.push_back(f.mid_s());
  return mids;
}

FrameSchedule FrameSchedule::slice(std::size_t first, std::size_t count) const {
  if (first + count > frames_.size() || count == 0) {
    throw ConfigError("schedule slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                      ") out of range for " + std::to_string(frames_.size()) + " frames");
  }
  return FrameSchedule(std::vector<Frame>(frames_.begin() + static_cast<std::ptrdiff_t>(first),
                                          frames_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

FrameSchedule FrameSchedule::with_leading_frame(double duration_s) const {
  std::vector<Frame> frames;
  const double origin = frames_.empty() ? 0.0 : start_s();
  frames.push_back({origin, duration_s});
  for (const auto& f : frames_) frames.push_back({f.start_s + duration_s, f.duration_s});
  return FrameSchedule(std::move(frames));
}

std::string to_string(const Extent3& e) {
  return std::to_string(e.x) + "x" + std::to_string(e.y) + "x" + std::to_string(e.z);
}

std::string_view units_tag(ValueUnits units) {
  switch (units) {
    case ValueUnits::suv_g_per_ml:
      return "SUV_g_per_ml";
    case ValueUnits::mbq_per_ml:
      return "MBq_per_ml";
    case ValueUnits::detector:
      return "detector";
  }
  return "SUV_g_per_ml";
}

ValueUnits units_from_tag(std::string_view tag) {
  if (tag == "SUV_g_per_ml") return ValueUnits::suv_g_per_ml;
  if (tag == "MBq_per_ml") return ValueUnits::mbq_per_ml;
  if (tag == "detector") return ValueUnits::detector;
  throw FormatError("unknown value units tag '" + std::string(tag) + "'");
}

DynamicPetImage::DynamicPetImage(FrameSchedule schedule_, Extent3 shape_, std::array<double, 3> voxel_size)
    : schedule(std::move(schedule_)), shape(shape_), voxel_size_mm(voxel_size),
      voxels(schedule.size() * shape.numel(), 0.0f) {}

std::span<const float> DynamicPetImage::frame(std::size_t t) const {
  const auto n = shape.numel();
  return std::span<const float>(voxels).subspan(t * n, n);
}

std::span<float> DynamicPetImage::frame(std::size_t t) {
  const auto n = shape.numel();
  return std::span<float>(voxels).subspan(t * n, n);
}

std::vector<double> DynamicPetImage::voxel_curve(std::size_t spatial_index) const {
  const auto n = shape.numel();
  std::vector<double> curve(frame_count());
  for (std::size_t t = 0; t < curve.size(); ++t) curve[t] = voxels[t * n + spatial_index];
  return curve;
}

InputFunction make_input_function(const FrameSchedule& schedule, std::vector<double> values) {
  if (values.size() != schedule.size()) {
    throw DimensionError("input function has " + std::to_string(values.size()) + " values for " +
                         std::to_string(schedule.size()) + " frames");
  }
  return InputFunction{schedule.mid_times(), std::move(values)};
}

DynamicPetImage prepend_first_frame(const DynamicPetImage& image) {
  if (image.frame_count() == 0) throw DimensionError("cannot prepend a frame to an empty image");
  DynamicPetImage out = image;
  out.schedule = image.schedule.with_leading_frame(image.schedule[0].duration_s);
  const auto first = image.frame(0);
  out.voxels.insert(out.voxels.begin(), first.begin(), first.end());
  return out;
}

DynamicPetImage drop_frames(const DynamicPetImage& image, std::size_t front, std::size_t back) {
  const auto t = image.frame_count();
  if (front + back >= t) {
    throw DimensionError("cannot drop " + std::to_string(front + back) + " of " + std::to_string(t) + " frames");
  }
  DynamicPetImage out = image;
  out.schedule = image.schedule.slice(front, t - front - back);
  const auto n = image.shape.numel();
  out.voxels.assign(image.voxels.begin() + static_cast<std::ptrdiff_t>(front * n),
                    image.voxels.end() - static_cast<std::ptrdiff_t>(back * n));
  return out;
}

InputFunction drop_frames(const InputFunction& curve, std::size_t front, std::size_t back) {
  const auto t = curve.size();
  if (front + back >= t) {
    throw DimensionError("cannot drop " + std::to_string(front + back) + " of " + std::to_string(t) + " frames");
  }
  auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(front),
                               v.end() - static_cast<std::ptrdiff_t>(back));
  };
  return InputFunction{cut(curve.mid_times_s), cut(curve.values)};
}

}  // namespace fcdlif
