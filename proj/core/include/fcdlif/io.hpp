#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcdlif/image.hpp"
#include "fcdlif/model.hpp"
#include "fcdlif/trace.hpp"

namespace fcdlif::io {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kImageFormatVersion = 1;
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

// "FDLF" image: header (dims, voxel size, schedule, units, metadata) followed
// by T*X*Y*Z little-endian float32 values, t-major then x, y, z.
Bytes encode_image(const DynamicPetImage& image);
DynamicPetImage decode_image(std::span<const std::uint8_t> bytes);
void save_image(const std::filesystem::path& path, const DynamicPetImage& image);
DynamicPetImage load_image(const std::filesystem::path& path);

// "FDLW" weights: architecture JSON, named float32 parameter blocks and a
// trailing CRC-32 of everything before it.
Bytes encode_weights(const InputFunctionModel& model);
std::unique_ptr<InputFunctionModel> decode_weights(std::span<const std::uint8_t> bytes);
void save_weights(const std::filesystem::path& path, const InputFunctionModel& model);
std::unique_ptr<InputFunctionModel> load_weights(const std::filesystem::path& path);
// Loads into an existing model; the stored architecture must match.
void load_weights_into(const std::filesystem::path& path, InputFunctionModel& model);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);
void save_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable load_csv(const std::filesystem::path& path);

// frame_index,mid_time_s,value
void save_curve(const std::filesystem::path& path, const InputFunction& curve);
InputFunction load_curve(const std::filesystem::path& path);
// Also checks the mid-times against `schedule`.
InputFunction load_curve(const std::filesystem::path& path, const FrameSchedule& schedule);

// time_s,value at 1 Hz
void save_trace(const std::filesystem::path& path, const ContinuousDetectorTrace& trace);
ContinuousDetectorTrace load_trace(const std::filesystem::path& path);
// start_s,value
void save_samples(const std::filesystem::path& path, std::span<const ManualSample> samples);
std::vector<ManualSample> load_samples(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> contents);

// manifest.json with the command, its settings and the library version.
void write_manifest(const std::filesystem::path& path, std::string_view command,
                    const std::map<std::string, std::string>& settings);

}  // namespace fcdlif::io
