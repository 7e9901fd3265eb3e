#include <gtest/gtest.h>

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "fcdlif/error.hpp"
#include "fcdlif/io.hpp"
#include "fcdlif/model.hpp"
#include "gradient_checks.hpp"

using namespace fcdlif;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("fcdlif_io_" + std::string(info->name()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

DynamicPetImage tiny_image() {
  DynamicPetImage img(FrameSchedule({{0.0, 30.0}, {30.0, 5.0}}), {2, 1, 1}, {1.5, 1.5, 2.0});
  img.metadata = {{"tracer", "FDG"}};
  img.voxels = {0.0f, 1.5f, -2.25f, 1e-30f};
  return img;
}

void push_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void push_f64(std::vector<std::uint8_t>& b, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}
void push_str(std::vector<std::uint8_t>& b, std::string_view s) {
  push_u32(b, static_cast<std::uint32_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}

// The tiny image laid out byte by byte from the documented format.
std::vector<std::uint8_t> tiny_image_bytes() {
  std::vector<std::uint8_t> b{'F', 'D', 'L', 'F'};
  push_u32(b, 1);
  for (std::uint32_t v : {2u, 2u, 1u, 1u}) push_u32(b, v);
  for (double v : {1.5, 1.5, 2.0}) push_f64(b, v);
  for (double v : {0.0, 30.0, 30.0, 5.0}) push_f64(b, v);
  push_str(b, "SUV_g_per_ml");
  push_u32(b, 1);
  push_str(b, "tracer");
  push_str(b, "FDG");
  for (float v : {0.0f, 1.5f, -2.25f, 1e-30f}) push_u32(b, std::bit_cast<std::uint32_t>(v));
  return b;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  const auto s = io::read_file(p);
  return {s.begin(), s.end()};
}

void expect_same_image(const DynamicPetImage& a, const DynamicPetImage& b) {
  EXPECT_EQ(a.schedule, b.schedule);
  EXPECT_EQ(a.shape, b.shape);
  EXPECT_EQ(a.voxel_size_mm, b.voxel_size_mm);
  EXPECT_EQ(a.units, b.units);
  EXPECT_EQ(a.metadata, b.metadata);
  ASSERT_EQ(a.voxels.size(), b.voxels.size());
  for (std::size_t i = 0; i < a.voxels.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(a.voxels[i]), std::bit_cast<std::uint32_t>(b.voxels[i]));
  }
}

}  // namespace

TEST(ImageFormat, EncodingMatchesDocumentedLayout) {
  EXPECT_EQ(io::encode_image(tiny_image()), tiny_image_bytes());
  expect_same_image(io::decode_image(tiny_image_bytes()), tiny_image());
}

TEST(ImageFormat, GoldenFile) {
  const fs::path golden = fs::path(FCDLIF_GOLDEN_DIR) / "tiny_image.fdlf";
  if (std::getenv("FCDLIF_UPDATE_GOLDEN")) io::save_image(golden, tiny_image());
  ASSERT_TRUE(fs::exists(golden));
  EXPECT_EQ(read_bytes(golden), io::encode_image(tiny_image()));
}

TEST(ImageFormat, RoundTripIsBitExact) {
  TempDir dir;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1e3f, 1e3f);
  DynamicPetImage img(FrameSchedule::standard(), {3, 4, 5});
  img.units = ValueUnits::mbq_per_ml;
  img.metadata = {{"a", ""}, {"seed", "12"}, {"note", "comma, and\nnewline"}};
  for (auto& v : img.voxels) v = u(rng);
  img.voxels[0] = std::numeric_limits<float>::denorm_min();
  img.voxels[1] = -0.0f;
  io::save_image(dir / "x.fdlf", img);
  expect_same_image(io::load_image(dir / "x.fdlf"), img);
  EXPECT_FALSE(fs::exists(dir / "x.fdlf.tmp"));
}

TEST(ImageFormat, CorruptionIsFormatError) {
  auto bytes = tiny_image_bytes();
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_image(bad), FormatError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(io::decode_image(bad), FormatError);
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    EXPECT_THROW(io::decode_image(std::span(bytes).first(cut)), FormatError) << cut;
  }
  bytes.push_back(0);
  EXPECT_THROW(io::decode_image(bytes), FormatError);
}

TEST(WeightsFormat, RoundTripIsBitExact) {
  TempDir dir;
  for (const auto& spec : {ModelSpec{ModelKind::fcdlif, oracle::toy_config()}, ModelSpec{ModelKind::baseline, desk_config()}}) {
    const auto model = build_model(spec, 7);
    io::save_weights(dir / "w.fdlw", *model);
    const auto loaded = io::load_weights(dir / "w.fdlw");
    EXPECT_EQ(loaded->kind(), model->kind());
    EXPECT_EQ(to_json(loaded->spec()), to_json(model->spec()));
    ASSERT_EQ(loaded->parameters().size(), model->parameters().size());
    for (std::size_t i = 0; i < model->parameters().size(); ++i) {
      const auto a = model->parameters()[i].tensor.values(), b = loaded->parameters()[i].tensor.values();
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), [](float x, float y) {
        return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
      }));
    }
    EXPECT_EQ(io::encode_weights(*loaded), io::encode_weights(*model));
  }
}

TEST(WeightsFormat, EverySingleByteFlipIsDetected) {
  const auto model = build_model({ModelKind::fcdlif, oracle::toy_config()}, 3);
  const auto bytes = io::encode_weights(*model);
  for (std::size_t pos = 0; pos < bytes.size(); pos += 7) {
    auto bad = bytes;
    bad[pos] ^= 0x10;
    EXPECT_THROW(io::decode_weights(bad), FormatError) << "byte " << pos;
  }
  EXPECT_THROW(io::decode_weights(std::span(bytes).first(bytes.size() - 1)), FormatError);
}

TEST(WeightsFormat, ChecksumMismatchIsReported) {
  const auto model = build_model({ModelKind::fcdlif, oracle::toy_config()}, 3);
  auto bytes = io::encode_weights(*model);
  bytes[bytes.size() / 2] ^= 1;
  try {
    io::decode_weights(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
  }
}

TEST(WeightsFormat, LoadIntoRequiresMatchingArchitecture) {
  TempDir dir;
  const auto toy = build_model({ModelKind::fcdlif, oracle::toy_config()}, 3);
  io::save_weights(dir / "toy.fdlw", *toy);
  auto same = build_model({ModelKind::fcdlif, oracle::toy_config()}, 4);
  io::load_weights_into(dir / "toy.fdlw", *same);
  EXPECT_EQ(io::encode_weights(*same), io::encode_weights(*toy));
  auto desk = build_model({ModelKind::fcdlif, desk_config()}, 4);
  EXPECT_THROW(io::load_weights_into(dir / "toy.fdlw", *desk), FormatError);
}

TEST(Csv, DoublesRoundTripExactly) {
  std::mt19937_64 rng(4);
  std::vector<double> values{0.0, -0.0, 1.0 / 3.0, 1e-310, std::numeric_limits<double>::max(), 24.3 / 42.0, -7.25};
  for (int i = 0; i < 1000; ++i) values.push_back(std::bit_cast<double>(rng() & 0x7fefffffffffffffULL));
  for (double v : values) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(io::parse_double(io::format_double(v))), std::bit_cast<std::uint64_t>(v));
  }
  EXPECT_THROW(io::parse_double("1.5x"), FormatError);
  EXPECT_THROW(io::parse_double(""), FormatError);
}

TEST(Csv, TableRoundTripAndColumnLookup) {
  io::CsvTable t{{"a", "b"}, {{"1", "x"}, {"2", "y"}}};
  const auto text = io::to_csv(t);
  EXPECT_EQ(text, "a,b\n1,x\n2,y\n");
  const auto back = io::parse_csv(text);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("b"), 1u);
  EXPECT_THROW(back.column("c"), FormatError);
  EXPECT_THROW(io::parse_csv("a,b\n1\n"), FormatError);
}

TEST(Csv, CurveTraceAndSamplesRoundTrip) {
  TempDir dir;
  const auto curve = make_input_function(FrameSchedule::standard(), std::vector<double>(42, 0.1));
  io::save_curve(dir / "c.csv", curve);
  const auto c = io::load_curve(dir / "c.csv");
  EXPECT_EQ(c.values, curve.values);
  EXPECT_EQ(c.mid_times_s, curve.mid_times_s);
  EXPECT_NO_THROW(io::load_curve(dir / "c.csv", FrameSchedule::standard()));
  EXPECT_THROW(io::load_curve(dir / "c.csv", FrameSchedule::standard().slice(0, 41)), DimensionError);

  ContinuousDetectorTrace trace;
  trace.start_s = -25.0;
  trace.values = {1.0, 2.5, 1e-9};
  io::save_trace(dir / "t.csv", trace);
  const auto tr = io::load_trace(dir / "t.csv");
  EXPECT_EQ(tr.start_s, trace.start_s);
  EXPECT_EQ(tr.values, trace.values);

  const std::vector<ManualSample> samples{{600.0, 2.0}, {1200.0, 1.25}};
  io::save_samples(dir / "s.csv", samples);
  const auto s = io::load_samples(dir / "s.csv");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].start_s, 1200.0);
  EXPECT_EQ(s[1].value, 1.25);
}

TEST(Csv, MalformedFilesAreFormatErrors) {
  TempDir dir;
  io::write_file_atomic(dir / "bad_index.csv", std::string_view("frame_index,mid_time_s,value\n1,15,2\n"));
  EXPECT_THROW(io::load_curve(dir / "bad_index.csv"), FormatError);
  io::write_file_atomic(dir / "bad_header.csv", std::string_view("time,value\n0,1\n1,2\n"));
  EXPECT_THROW(io::load_trace(dir / "bad_header.csv"), FormatError);
  io::write_file_atomic(dir / "gap.csv", std::string_view("time_s,value\n0,1\n2,2\n"));
  EXPECT_THROW(io::load_trace(dir / "gap.csv"), FormatError);
  EXPECT_THROW(io::read_file(dir / "missing.csv"), FormatError);
}

TEST(Manifest, RecordsCommandSettingsAndVersions) {
  TempDir dir;
  io::write_manifest(dir / "manifest.json", "simulate", {{"seed", "3"}, {"count", "20"}});
  const auto j = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
  EXPECT_EQ(j.at("command"), "simulate");
  EXPECT_EQ(j.at("settings").at("seed"), "3");
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(j.at("image_format_version"), io::kImageFormatVersion);
}
