#include "fcdlif/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>
#include <json.hpp>

#include "fcdlif/error.hpp"

namespace fcdlif::io {
namespace {

constexpr std::string_view kImageMagic = "FDLF";
constexpr std::string_view kWeightsMagic = "FDLW";

class Writer {
 public:
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  Bytes& bytes() { return out_; }

 private:
  Bytes out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> in, std::string_view what) : in_(in), what_(what) {}

  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() { return std::string(raw(u32())); }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string(what_) + ": truncated at byte " + std::to_string(pos_) + " (needs " +
                        std::to_string(n) + " more)");
    }
  }
  std::span<const std::uint8_t> in_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

CsvTable expect_columns(const std::filesystem::path& path, std::initializer_list<std::string_view> columns) {
  auto table = load_csv(path);
  if (table.header.size() != columns.size() || !std::equal(columns.begin(), columns.end(), table.header.begin())) {
    std::string expected;
    for (auto c : columns) expected += (expected.empty() ? "" : ",") + std::string(c);
    throw FormatError(path.string() + ": expected header '" + expected + "'");
  }
  return table;
}

}  // namespace

Bytes encode_image(const DynamicPetImage& image) {
  const std::size_t t = image.frame_count();
  if (image.voxels.size() != t * image.shape.numel()) {
    throw DimensionError("encode_image: voxel buffer does not match the header dimensions");
  }
  Writer w;
  w.raw(kImageMagic);
  w.u32(kImageFormatVersion);
  w.u32(static_cast<std::uint32_t>(t));
  w.u32(static_cast<std::uint32_t>(image.shape.x));
  w.u32(static_cast<std::uint32_t>(image.shape.y));
  w.u32(static_cast<std::uint32_t>(image.shape.z));
  for (double v : image.voxel_size_mm) w.f64(v);
  for (const auto& f : image.schedule.frames()) {
    w.f64(f.start_s);
    w.f64(f.duration_s);
  }
  w.str(units_tag(image.units));
  w.u32(static_cast<std::uint32_t>(image.metadata.size()));
  for (const auto& [k, v] : image.metadata) {
    w.str(k);
    w.str(v);
  }
  for (float v : image.voxels) w.f32(v);
  return std::move(w.bytes());
}

DynamicPetImage decode_image(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "image");
  if (r.raw(4) != kImageMagic) throw FormatError("image: bad magic (not an FDLF file)");
  const auto version = r.u32();
  if (version != kImageFormatVersion) {
    throw FormatError("image: unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kImageFormatVersion) + ")");
  }
  const std::size_t t = r.u32();
  Extent3 shape;
  shape.x = r.u32();
  shape.y = r.u32();
  shape.z = r.u32();
  std::array<double, 3> voxel{};
  for (auto& v : voxel) v = r.f64();
  std::vector<Frame> frames(t);
  for (auto& f : frames) {
    f.start_s = r.f64();
    f.duration_s = r.f64();
  }
  DynamicPetImage image(FrameSchedule(std::move(frames)), shape, voxel);
  image.units = units_from_tag(r.str());
  const auto entries = r.u32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    auto key = r.str();
    image.metadata[key] = r.str();
  }
  const std::size_t count = t * shape.numel();
  if (r.remaining() != 4 * count) {
    throw FormatError("image: payload holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                      std::to_string(4 * count));
  }
  image.voxels.resize(count);
  for (auto& v : image.voxels) v = r.f32();
  return image;
}

void save_image(const std::filesystem::path& path, const DynamicPetImage& image) {
  write_file_atomic(path, encode_image(image));
}

DynamicPetImage load_image(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return decode_image({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Bytes encode_weights(const InputFunctionModel& model) {
  Writer w;
  w.raw(kWeightsMagic);
  w.u32(kWeightsFormatVersion);
  w.str(to_json(model.spec()));
  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.tensor.dim()));
    for (auto d : p.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p.tensor.values()) w.f32(v);
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

namespace {

void read_blocks(Reader& r, InputFunctionModel& model) {
  const auto params = model.parameters();
  const auto count = r.u32();
  if (count != params.size()) {
    throw FormatError("weights: file holds " + std::to_string(count) + " parameter blocks, model has " +
                      std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const auto name = r.str();
    if (name != p.name) throw FormatError("weights: expected block '" + p.name + "', found '" + name + "'");
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    if (shape != p.tensor.shape()) {
      throw FormatError("weights: block '" + name + "' has shape " + shape_string(shape) + ", model expects " +
                        shape_string(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    for (auto& v : t.mutable_values()) v = r.f32();
  }
}

Reader open_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError("weights: file too short");
  Reader r(bytes, "weights");
  if (r.raw(4) != kWeightsMagic) throw FormatError("weights: bad magic (not an FDLW file)");
  const auto version = r.u32();
  if (version != kWeightsFormatVersion) {
    throw FormatError("weights: unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kWeightsFormatVersion) + ")");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.subspan(bytes.size() - 4), "weights");
  if (tail.u32() != crc32(body)) throw FormatError("weights: checksum mismatch (file is corrupted)");
  return r;
}

void finish(const Reader& r, std::size_t total) {
  if (r.position() != total - 4) throw FormatError("weights: unexpected bytes after the last parameter block");
}

}  // namespace

std::unique_ptr<InputFunctionModel> decode_weights(std::span<const std::uint8_t> bytes) {
  auto r = open_weights(bytes);
  auto model = build_model(model_spec_from_json(r.str()), 0);
  read_blocks(r, *model);
  finish(r, bytes.size());
  return model;
}

void save_weights(const std::filesystem::path& path, const InputFunctionModel& model) {
  write_file_atomic(path, encode_weights(model));
}

std::unique_ptr<InputFunctionModel> load_weights(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return decode_weights({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void load_weights_into(const std::filesystem::path& path, InputFunctionModel& model) {
  const auto text = read_file(path);
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
  try {
    auto r = open_weights(bytes);
    const auto stored = r.str();
    if (model_spec_from_json(stored).kind != model.kind() || to_json(model_spec_from_json(stored)) != to_json(model.spec())) {
      throw FormatError("weights: stored architecture " + stored + " does not match the model " + to_json(model.spec()));
    }
    read_blocks(r, model);
    finish(r, bytes.size());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw FormatError("not a number: '" + std::string(text) + "'");
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("CSV has no column '" + std::string(name) + "'");
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size()) {
        throw FormatError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                          " fields, header has " + std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw FormatError("CSV is empty");
  return table;
}

void save_csv(const std::filesystem::path& path, const CsvTable& table) { write_file_atomic(path, to_csv(table)); }

CsvTable load_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_curve(const std::filesystem::path& path, const InputFunction& curve) {
  if (curve.mid_times_s.size() != curve.values.size()) throw DimensionError("save_curve: mid-times and values differ in length");
  CsvTable table{{"frame_index", "mid_time_s", "value"}, {}};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    table.rows.push_back({std::to_string(i), format_double(curve.mid_times_s[i]), format_double(curve.values[i])});
  }
  save_csv(path, table);
}

InputFunction load_curve(const std::filesystem::path& path) {
  const auto table = expect_columns(path, {"frame_index", "mid_time_s", "value"});
  InputFunction curve;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row[0] != std::to_string(i)) {
      throw FormatError(path.string() + ": frame_index must count up from 0 (row " + std::to_string(i) + " has '" +
                        row[0] + "')");
    }
    curve.mid_times_s.push_back(parse_double(row[1]));
    curve.values.push_back(parse_double(row[2]));
  }
  return curve;
}

InputFunction load_curve(const std::filesystem::path& path, const FrameSchedule& schedule) {
  auto curve = load_curve(path);
  const auto mids = schedule.mid_times();
  if (curve.size() != mids.size()) {
    throw DimensionError(path.string() + ": curve has " + std::to_string(curve.size()) + " frames, schedule has " +
                         std::to_string(mids.size()));
  }
  for (std::size_t i = 0; i < mids.size(); ++i) {
    if (std::abs(curve.mid_times_s[i] - mids[i]) > 1e-6 * std::max(1.0, std::abs(mids[i]))) {
      throw FormatError(path.string() + ": mid_time_s of frame " + std::to_string(i) + " is inconsistent with the schedule");
    }
  }
  return curve;
}

void save_trace(const std::filesystem::path& path, const ContinuousDetectorTrace& trace) {
  CsvTable table{{"time_s", "value"}, {}};
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    table.rows.push_back({format_double(trace.time(i)), format_double(trace.values[i])});
  }
  save_csv(path, table);
}

ContinuousDetectorTrace load_trace(const std::filesystem::path& path) {
  const auto table = expect_columns(path, {"time_s", "value"});
  if (table.rows.size() < 2) throw FormatError(path.string() + ": trace needs at least 2 samples");
  ContinuousDetectorTrace trace;
  trace.start_s = parse_double(table.rows[0][0]);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double t = parse_double(table.rows[i][0]);
    if (std::abs(t - trace.time(i)) > 1e-6) {
      throw FormatError(path.string() + ": samples must be spaced exactly 1 s apart (row " + std::to_string(i) + ")");
    }
    trace.values.push_back(parse_double(table.rows[i][1]));
  }
  return trace;
}

void save_samples(const std::filesystem::path& path, std::span<const ManualSample> samples) {
  CsvTable table{{"start_s", "value"}, {}};
  for (const auto& s : samples) table.rows.push_back({format_double(s.start_s), format_double(s.value)});
  save_csv(path, table);
}

std::vector<ManualSample> load_samples(const std::filesystem::path& path) {
  const auto table = expect_columns(path, {"start_s", "value"});
  std::vector<ManualSample> out;
  for (const auto& row : table.rows) out.push_back({parse_double(row[0]), parse_double(row[1])});
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> contents) {
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(contents.data()), contents.size()));
}

void write_manifest(const std::filesystem::path& path, std::string_view command,
                    const std::map<std::string, std::string>& settings) {
  nlohmann::ordered_json j;
  j["tool"] = "fcdlif";
  j["version"] = FCDLIF_VERSION;
  j["command"] = command;
  j["image_format_version"] = kImageFormatVersion;
  j["weights_format_version"] = kWeightsFormatVersion;
  j["settings"] = settings;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace fcdlif::io
