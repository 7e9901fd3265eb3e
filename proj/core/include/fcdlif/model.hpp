#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcdlif/image.hpp"
#include "fcdlif/ops.hpp"
#include "fcdlif/tensor.hpp"

namespace fcdlif {

// Spatial feature extractor: per stage a 3x3x3 stem convolution followed by
// residual blocks (conv-norm-relu-conv-norm + skip, relu), stages separated by
// 2x2x2 max pooling, then a cuboid convolution and adaptive average pooling
// down to an embedding vector.
struct SfeConfig {
  Extent3 input_shape{24, 16, 16};
  std::vector<std::size_t> stage_widths{4, 8, 16};
  std::size_t blocks_per_stage = 1;
  ops::Index3 final_kernel{4, 2, 2};
  std::size_t embedding_width = 16;

  // Throws ConfigError naming the first stage whose input cannot be pooled
  // or convolved.
  void validate() const;
  // Spatial extent entering the cuboid convolution.
  Extent3 trunk_output_shape() const;
};

// Temporal feature extractor: same-padded stride-1 1D convolutions with odd
// kernels, ReLU between layers, linear last layer with one output channel.
struct TfeConfig {
  std::vector<std::size_t> channels{16, 8, 4, 2, 1};  // input width first
  std::vector<std::size_t> kernel_sizes{5, 5, 5, 5};

  // Halves the width per layer from `embedding_width`, ending at 1.
  static TfeConfig descending(std::size_t embedding_width, std::size_t layers = 4, std::size_t kernel = 5);

  std::size_t layer_count() const { return kernel_sizes.size(); }
  // Number of frames on each side that influence one output frame.
  std::size_t receptive_radius() const;
  void validate() const;
};

struct ModelConfig {
  SfeConfig sfe;
  TfeConfig tfe;
};

// Desk-scale preset: 24x16x16 voxels, widths 4/8/16, embedding 16.
ModelConfig desk_config();
// Reference layout for 96x48x48 inputs: widths 8/16/32, embedding 32,
// TFE 32->16->8->4->1.
ModelConfig reference_config();

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

enum class ModelKind { fcdlif, baseline };
std::string_view kind_name(ModelKind kind);

// Architecture description echoed into weight files.
struct ModelSpec {
  ModelKind kind = ModelKind::fcdlif;
  ModelConfig config;
};

std::string to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(std::string_view json);

class SpatialFeatureExtractor {
 public:
  SpatialFeatureExtractor(const SfeConfig& config, std::uint64_t seed, std::vector<NamedTensor>& registry);

  // One frame of config.input_shape voxels -> [E] embedding.
  Tensor forward(std::span<const float> frame) const;
  const SfeConfig& config() const { return config_; }

 private:
  struct Block {
    Tensor conv1, scale1, shift1, conv2, scale2, shift2;
  };
  struct Stage {
    Tensor stem_weight, stem_bias;
    std::vector<Block> blocks;
  };

  SfeConfig config_;
  std::vector<Stage> stages_;
  Tensor final_weight_, final_bias_;
};

// Common interface of the FC-DLIF network and the fixed-length baseline.
class InputFunctionModel {
 public:
  virtual ~InputFunctionModel() = default;

  virtual ModelKind kind() const = 0;
  virtual const ModelConfig& config() const = 0;
  // Raw (unclamped) per-frame prediction of shape [T], recorded for autograd
  // unless a NoGradGuard is active.
  virtual Tensor forward(const DynamicPetImage& image) const = 0;

  std::span<const NamedTensor> parameters() const { return params_; }
  std::vector<Tensor> parameter_tensors() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;
  ModelSpec spec() const { return {kind(), config()}; }

 protected:
  void check_spatial_shape(const DynamicPetImage& image) const;
  std::vector<NamedTensor> params_;
};

class FcDlifModel final : public InputFunctionModel {
 public:
  FcDlifModel(ModelConfig config, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::fcdlif; }
  const ModelConfig& config() const override { return config_; }
  Tensor forward(const DynamicPetImage& image) const override;

  // Stacked SFE embeddings, shape [E, T].
  Tensor sfe_features(const DynamicPetImage& image) const;
  std::size_t temporal_receptive_radius() const { return config_.tfe.receptive_radius(); }

 private:
  Tensor temporal(const Tensor& features) const;

  ModelConfig config_;
  SpatialFeatureExtractor sfe_;
  std::vector<Tensor> tfe_weights_, tfe_biases_;
};

// SFE trunk followed by a fully connected head over the flattened [E x 42]
// embedding sequence. Only accepts exactly 42 frames.
class BaselineModel final : public InputFunctionModel {
 public:
  static constexpr std::size_t kFrames = 42;

  BaselineModel(SfeConfig sfe, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::baseline; }
  const ModelConfig& config() const override { return config_; }
  Tensor forward(const DynamicPetImage& image) const override;

 private:
  ModelConfig config_;
  SpatialFeatureExtractor sfe_;
  Tensor head_weight_, head_bias_;
};

std::unique_ptr<FcDlifModel> build_fcdlif(const SfeConfig& sfe, const TfeConfig& tfe, std::uint64_t seed);
std::unique_ptr<BaselineModel> build_baseline(std::uint64_t seed, const SfeConfig& sfe = desk_config().sfe);
std::unique_ptr<InputFunctionModel> build_model(const ModelSpec& spec, std::uint64_t seed);

// Inference: no graph recording, output clamped at zero.
InputFunction predict(const InputFunctionModel& model, const DynamicPetImage& image);

// E x T embedding matrix, row-major (row e holds feature e over time).
struct FeatureMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

FeatureMatrix extract_sfe_features(const FcDlifModel& model, const DynamicPetImage& image);

// Copies parameter values between models with identical specs.
void copy_parameters(const InputFunctionModel& from, InputFunctionModel& to);

}  // namespace fcdlif
