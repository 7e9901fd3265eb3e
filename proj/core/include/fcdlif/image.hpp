#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fcdlif {

struct Frame {
  double start_s = 0.0;
  double duration_s = 0.0;

  double end_s() const { return start_s + duration_s; }
  double mid_s() const { return start_s + 0.5 * duration_s; }
  bool operator==(const Frame&) const = default;
};

// Contiguous, non-overlapping acquisition frames.
class FrameSchedule {
 public:
  FrameSchedule() = default;
  explicit FrameSchedule(std::vector<Frame> frames);

  // Consecutive blocks of (count, duration) starting at `start_s`.
  static FrameSchedule from_blocks(std::span<const std::pair<std::size_t, double>> blocks, double start_s = 0.0);

  // 1x30 s, 24x5 s, 9x20 s, 8x300 s: 42 frames over 2730 s.
  static FrameSchedule standard();

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Frame>& frames() const { return frames_; }
  double start_s() const;
  double end_s() const;
  double span_s() const { return end_s() - start_s(); }
  std::vector<double> mid_times() const;

  FrameSchedule slice(std::size_t first, std::size_t count) const;
  // Inserts a frame of `duration_s` before the first one; later frames shift.
  FrameSchedule with_leading_frame(double duration_s) const;

  bool operator==(const FrameSchedule&) const = default;

 private:
  std::vector<Frame> frames_;
};

struct Extent3 {
  std::size_t x = 0, y = 0, z = 0;

  std::size_t numel() const { return x * y * z; }
  bool operator==(const Extent3&) const = default;
};

std::string to_string(const Extent3& e);

enum class ValueUnits { suv_g_per_ml, mbq_per_ml, detector };

std::string_view units_tag(ValueUnits units);
ValueUnits units_from_tag(std::string_view tag);

// 4D (time, x, y, z) voxel array. Voxels are stored t-major, then x, y, z
// row-major, so each frame is a contiguous block of shape.numel() floats.
struct DynamicPetImage {
  FrameSchedule schedule;
  Extent3 shape;
  std::array<double, 3> voxel_size_mm{1.5, 1.5, 1.5};
  ValueUnits units = ValueUnits::suv_g_per_ml;
  std::map<std::string, std::string> metadata;
  std::vector<float> voxels;

  DynamicPetImage() = default;
  DynamicPetImage(FrameSchedule schedule, Extent3 shape, std::array<double, 3> voxel_size_mm = {1.5, 1.5, 1.5});

  std::size_t frame_count() const { return schedule.size(); }
  std::span<const float> frame(std::size_t t) const;
  std::span<float> frame(std::size_t t);
  std::size_t voxel_index(std::size_t x, std::size_t y, std::size_t z) const { return (x * shape.y + y) * shape.z + z; }
  // Time-activity curve of one voxel (flat spatial index).
  std::vector<double> voxel_curve(std::size_t spatial_index) const;
};

// Per-frame arterial concentration curve (measured AIF or predicted DLIF).
struct InputFunction {
  std::vector<double> mid_times_s;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

InputFunction make_input_function(const FrameSchedule& schedule, std::vector<double> values);

// Duplicates frame 0 in front of the sequence (T -> T+1).
DynamicPetImage prepend_first_frame(const DynamicPetImage& image);
// Drops `front` leading and `back` trailing frames.
DynamicPetImage drop_frames(const DynamicPetImage& image, std::size_t front, std::size_t back);
InputFunction drop_frames(const InputFunction& curve, std::size_t front, std::size_t back);

}  // namespace fcdlif
