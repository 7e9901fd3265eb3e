#include "fcdlif/model.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "fcdlif/error.hpp"

namespace fcdlif {
namespace {

using nlohmann::json;

// He-uniform initialisation: U(-b, b) with b = sqrt(6 / fan_in).
Tensor he_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<float>(dist(rng));
  return Tensor(std::move(shape), std::move(values), true);
}

Tensor register_param(std::vector<NamedTensor>& registry, std::string name, Tensor t) {
  registry.push_back({std::move(name), t});
  return t;
}

Extent3 pooled(Extent3 e) { return {e.x / 2, e.y / 2, e.z / 2}; }

}  // namespace

void SfeConfig::validate() const {
  if (input_shape.numel() == 0) throw ConfigError("SFE: input shape must be positive, got " + to_string(input_shape));
  if (stage_widths.empty()) throw ConfigError("SFE: at least one stage is required");
  if (embedding_width < 1) throw ConfigError("SFE: embedding width must be >= 1");
  for (auto w : stage_widths) {
    if (w < 1) throw ConfigError("SFE: stage widths must be >= 1");
  }
  for (auto k : final_kernel) {
    if (k < 1) throw ConfigError("SFE: final kernel extents must be >= 1");
  }
  Extent3 e = input_shape;
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    if (s > 0) {
      if (e.x < 2 || e.y < 2 || e.z < 2) {
        throw ConfigError("SFE stage " + std::to_string(s) + ": extent " + to_string(e) +
                          " is too small for 2x2x2 max pooling");
      }
      e = pooled(e);
    }
    if (blocks_per_stage > 0 && e.numel() < 2) {
      throw ConfigError("SFE stage " + std::to_string(s) + ": extent " + to_string(e) +
                        " leaves fewer than 2 cells per channel for instance normalisation");
    }
  }
  if (e.x < final_kernel[0] || e.y < final_kernel[1] || e.z < final_kernel[2]) {
    throw ConfigError("SFE final cuboid convolution: kernel " + std::to_string(final_kernel[0]) + "x" +
                      std::to_string(final_kernel[1]) + "x" + std::to_string(final_kernel[2]) +
                      " exceeds the last stage output " + to_string(e));
  }
}

Extent3 SfeConfig::trunk_output_shape() const {
  Extent3 e = input_shape;
  for (std::size_t s = 1; s < stage_widths.size(); ++s) e = pooled(e);
  return e;
}

TfeConfig TfeConfig::descending(std::size_t embedding_width, std::size_t layers, std::size_t kernel) {
  if (layers < 1) throw ConfigError("TFE: at least one layer is required");
  TfeConfig cfg;
  cfg.channels = {embedding_width};
  for (std::size_t i = 1; i < layers; ++i) cfg.channels.push_back(std::max<std::size_t>(1, embedding_width >> i));
  cfg.channels.push_back(1);
  cfg.kernel_sizes.assign(layers, kernel);
  return cfg;
}

std::size_t TfeConfig::receptive_radius() const {
  std::size_t r = 0;
  for (auto k : kernel_sizes) r += (k - 1) / 2;
  return r;
}

void TfeConfig::validate() const {
  if (kernel_sizes.empty()) throw ConfigError("TFE: at least one layer is required");
  if (channels.size() != kernel_sizes.size() + 1) {
    throw ConfigError("TFE: expected " + std::to_string(kernel_sizes.size() + 1) + " channel widths for " +
                      std::to_string(kernel_sizes.size()) + " layers");
  }
  if (channels.back() != 1) throw ConfigError("TFE: the last layer must have exactly 1 output channel");
  for (auto c : channels) {
    if (c < 1) throw ConfigError("TFE: channel widths must be >= 1");
  }
  for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
    if (kernel_sizes[i] % 2 == 0) {
      throw ConfigError("TFE layer " + std::to_string(i) + ": kernel size " + std::to_string(kernel_sizes[i]) +
                        " must be odd to preserve the sequence length");
    }
  }
}

ModelConfig desk_config() {
  ModelConfig cfg;
  cfg.sfe.input_shape = {24, 16, 16};
  cfg.sfe.stage_widths = {4, 8, 16};
  cfg.sfe.embedding_width = 16;
  cfg.tfe = TfeConfig::descending(16);
  return cfg;
}

ModelConfig reference_config() {
  ModelConfig cfg;
  cfg.sfe.input_shape = {96, 48, 48};
  cfg.sfe.stage_widths = {8, 16, 32};
  cfg.sfe.embedding_width = 32;
  cfg.tfe = TfeConfig::descending(32);
  return cfg;
}

std::string_view kind_name(ModelKind kind) { return kind == ModelKind::fcdlif ? "fcdlif" : "baseline"; }

std::string to_json(const ModelSpec& spec) {
  const auto& s = spec.config.sfe;
  const auto& t = spec.config.tfe;
  json j;
  j["kind"] = kind_name(spec.kind);
  j["sfe"] = {{"input_shape", {s.input_shape.x, s.input_shape.y, s.input_shape.z}},
              {"stage_widths", s.stage_widths},
              {"blocks_per_stage", s.blocks_per_stage},
              {"final_kernel", s.final_kernel},
              {"embedding_width", s.embedding_width}};
  j["tfe"] = {{"channels", t.channels}, {"kernel_sizes", t.kernel_sizes}};
  return j.dump();
}

ModelSpec model_spec_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    ModelSpec spec;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "fcdlif") {
      spec.kind = ModelKind::fcdlif;
    } else if (kind == "baseline") {
      spec.kind = ModelKind::baseline;
    } else {
      throw FormatError("unknown model kind '" + kind + "'");
    }
    const auto& s = j.at("sfe");
    const auto shape = s.at("input_shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw FormatError("sfe.input_shape must have 3 entries");
    spec.config.sfe.input_shape = {shape[0], shape[1], shape[2]};
    spec.config.sfe.stage_widths = s.at("stage_widths").get<std::vector<std::size_t>>();
    spec.config.sfe.blocks_per_stage = s.at("blocks_per_stage").get<std::size_t>();
    spec.config.sfe.final_kernel = s.at("final_kernel").get<ops::Index3>();
    spec.config.sfe.embedding_width = s.at("embedding_width").get<std::size_t>();
    const auto& t = j.at("tfe");
    spec.config.tfe.channels = t.at("channels").get<std::vector<std::size_t>>();
    spec.config.tfe.kernel_sizes = t.at("kernel_sizes").get<std::vector<std::size_t>>();
    return spec;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model config: ") + e.what());
  }
}

SpatialFeatureExtractor::SpatialFeatureExtractor(const SfeConfig& config, std::uint64_t seed,
                                                 std::vector<NamedTensor>& registry)
    : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  std::size_t in_ch = 1;
  for (std::size_t s = 0; s < config_.stage_widths.size(); ++s) {
    const auto w = config_.stage_widths[s];
    const std::string prefix = "sfe.stage" + std::to_string(s);
    Stage stage;
    stage.stem_weight = register_param(registry, prefix + ".stem.weight", he_uniform({w, in_ch, 3, 3, 3}, in_ch * 27, rng));
    stage.stem_bias = register_param(registry, prefix + ".stem.bias", Tensor::zeros({w}, true));
    for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
      const std::string bp = prefix + ".block" + std::to_string(b);
      Block block;
      block.conv1 = register_param(registry, bp + ".conv1.weight", he_uniform({w, w, 3, 3, 3}, w * 27, rng));
      block.scale1 = register_param(registry, bp + ".norm1.scale", Tensor::full({w}, 1.0f, true));
      block.shift1 = register_param(registry, bp + ".norm1.shift", Tensor::zeros({w}, true));
      block.conv2 = register_param(registry, bp + ".conv2.weight", he_uniform({w, w, 3, 3, 3}, w * 27, rng));
      block.scale2 = register_param(registry, bp + ".norm2.scale", Tensor::full({w}, 1.0f, true));
      block.shift2 = register_param(registry, bp + ".norm2.shift", Tensor::zeros({w}, true));
      stage.blocks.push_back(std::move(block));
    }
    stages_.push_back(std::move(stage));
    in_ch = w;
  }
  const auto& k = config_.final_kernel;
  const auto e = config_.embedding_width;
  final_weight_ = register_param(registry, "sfe.final.weight", he_uniform({e, in_ch, k[0], k[1], k[2]}, in_ch * k[0] * k[1] * k[2], rng));
  final_bias_ = register_param(registry, "sfe.final.bias", Tensor::zeros({e}, true));
}

Tensor SpatialFeatureExtractor::forward(std::span<const float> frame) const {
  const auto& in = config_.input_shape;
  if (frame.size() != in.numel()) {
    throw DimensionError("SFE: frame has " + std::to_string(frame.size()) + " voxels, expected " + to_string(in));
  }
  Tensor h({1, in.x, in.y, in.z}, std::vector<float>(frame.begin(), frame.end()));
  const ops::Conv3dOptions same{{1, 1, 1}, {1, 1, 1}};
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    if (s > 0) h = ops::maxpool3d(h, {2, 2, 2}, {2, 2, 2});
    const auto& stage = stages_[s];
    h = ops::conv3d(h, stage.stem_weight, stage.stem_bias, same);
    for (const auto& b : stage.blocks) {
      Tensor r = ops::conv3d(h, b.conv1, Tensor(), same);
      r = ops::relu(ops::instance_norm(r, b.scale1, b.shift1));
      r = ops::conv3d(r, b.conv2, Tensor(), same);
      r = ops::instance_norm(r, b.scale2, b.shift2);
      h = ops::relu(ops::residual_add(h, r));
    }
  }
  h = ops::conv3d(h, final_weight_, final_bias_);
  return ops::adaptive_avg_pool(h);
}

std::vector<Tensor> InputFunctionModel::parameter_tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

std::vector<std::string> InputFunctionModel::parameter_names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

std::size_t InputFunctionModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void InputFunctionModel::check_spatial_shape(const DynamicPetImage& image) const {
  const auto& expected = config().sfe.input_shape;
  if (!(image.shape == expected)) {
    throw DimensionError("spatial shape mismatch: model expects " + to_string(expected) + " voxels, image has " +
                         to_string(image.shape) + "; resample the spatial dimensions before inference");
  }
  if (image.frame_count() == 0) throw DimensionError("image has no frames");
  if (image.voxels.size() != image.frame_count() * image.shape.numel()) {
    throw DimensionError("image voxel buffer does not match its header dimensions");
  }
}

FcDlifModel::FcDlifModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), sfe_((config_.sfe.validate(), config_.tfe.validate(), config_.sfe), seed, params_) {
  if (config_.tfe.channels.front() != config_.sfe.embedding_width) {
    throw ConfigError("TFE input width " + std::to_string(config_.tfe.channels.front()) +
                      " does not match the SFE embedding width " + std::to_string(config_.sfe.embedding_width));
  }
  // Separate stream so the TFE init does not depend on the SFE size.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t l = 0; l < config_.tfe.layer_count(); ++l) {
    const auto cin = config_.tfe.channels[l];
    const auto cout = config_.tfe.channels[l + 1];
    const auto k = config_.tfe.kernel_sizes[l];
    const std::string prefix = "tfe.layer" + std::to_string(l);
    tfe_weights_.push_back(register_param(params_, prefix + ".weight", he_uniform({cout, cin, k}, cin * k, rng)));
    tfe_biases_.push_back(register_param(params_, prefix + ".bias", Tensor::zeros({cout}, true)));
  }
}

Tensor FcDlifModel::sfe_features(const DynamicPetImage& image) const {
  check_spatial_shape(image);
  std::vector<Tensor> columns;
  columns.reserve(image.frame_count());
  for (std::size_t t = 0; t < image.frame_count(); ++t) columns.push_back(sfe_.forward(image.frame(t)));
  return ops::stack_columns(columns);
}

Tensor FcDlifModel::temporal(const Tensor& features) const {
  Tensor h = features;
  const ops::Conv1dOptions same{.same = true};
  for (std::size_t l = 0; l < tfe_weights_.size(); ++l) {
    h = ops::conv1d(h, tfe_weights_[l], tfe_biases_[l], same);
    if (l + 1 < tfe_weights_.size()) h = ops::relu(h);
  }
  return ops::reshape(h, {h.size(1)});
}

Tensor FcDlifModel::forward(const DynamicPetImage& image) const { return temporal(sfe_features(image)); }

BaselineModel::BaselineModel(SfeConfig sfe, std::uint64_t seed)
    : config_{std::move(sfe), TfeConfig{}}, sfe_(config_.sfe, seed, params_) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto in = config_.sfe.embedding_width * kFrames;
  head_weight_ = register_param(params_, "head.weight", he_uniform({kFrames, in}, in, rng));
  head_bias_ = register_param(params_, "head.bias", Tensor::zeros({kFrames}, true));
}

Tensor BaselineModel::forward(const DynamicPetImage& image) const {
  check_spatial_shape(image);
  if (image.frame_count() != kFrames) {
    throw FixedLengthError("baseline model requires exactly " + std::to_string(kFrames) + " frames, got " +
                           std::to_string(image.frame_count()));
  }
  std::vector<Tensor> columns;
  columns.reserve(kFrames);
  for (std::size_t t = 0; t < kFrames; ++t) columns.push_back(sfe_.forward(image.frame(t)));
  const Tensor features = ops::stack_columns(columns);
  return ops::linear(ops::reshape(features, {features.numel()}), head_weight_, head_bias_);
}

std::unique_ptr<FcDlifModel> build_fcdlif(const SfeConfig& sfe, const TfeConfig& tfe, std::uint64_t seed) {
  return std::make_unique<FcDlifModel>(ModelConfig{sfe, tfe}, seed);
}

std::unique_ptr<BaselineModel> build_baseline(std::uint64_t seed, const SfeConfig& sfe) {
  return std::make_unique<BaselineModel>(sfe, seed);
}

std::unique_ptr<InputFunctionModel> build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.kind == ModelKind::baseline) return build_baseline(seed, spec.config.sfe);
  return build_fcdlif(spec.config.sfe, spec.config.tfe, seed);
}

InputFunction predict(const InputFunctionModel& model, const DynamicPetImage& image) {
  NoGradGuard no_grad;
  const Tensor out = model.forward(image);
  std::vector<double> values(out.numel());
  const auto v = out.values();
  for (std::size_t t = 0; t < values.size(); ++t) values[t] = std::max(0.0, static_cast<double>(v[t]));
  return make_input_function(image.schedule, std::move(values));
}

FeatureMatrix extract_sfe_features(const FcDlifModel& model, const DynamicPetImage& image) {
  NoGradGuard no_grad;
  const Tensor f = model.sfe_features(image);
  FeatureMatrix m{f.size(0), f.size(1), {}};
  m.values.assign(f.values().begin(), f.values().end());
  return m;
}

void copy_parameters(const InputFunctionModel& from, InputFunctionModel& to) {
  const auto src = from.parameters();
  const auto dst = to.parameters();
  if (src.size() != dst.size()) throw ConfigError("copy_parameters: models have different parameter sets");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name || src[i].tensor.shape() != dst[i].tensor.shape()) {
      throw ConfigError("copy_parameters: parameter '" + src[i].name + "' does not match '" + dst[i].name + "'");
    }
    Tensor target = dst[i].tensor;
    const auto v = src[i].tensor.values();
    std::copy(v.begin(), v.end(), target.mutable_values().begin());
  }
}

}  // namespace fcdlif
