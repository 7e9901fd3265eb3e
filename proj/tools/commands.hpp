#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace fcdlif::cli {

struct SimulateOptions {
  std::size_t count = 20;
  std::string grid = "24x16x16";
  std::string schedule = "standard";
  double voxel_size_mm = 1.5;
  double count_scale = 10.0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

struct TrainOptions {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::size_t epochs = 1000;
  double learning_rate = 1e-4;
  std::size_t folds = 10;
  std::size_t runs = 10;
  bool no_augment = false;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string model = "fcdlif";
  std::string preset = "desk";
};

struct PredictOptions {
  std::filesystem::path weights;
  std::filesystem::path image;
  std::filesystem::path out;
};

struct EvaluateOptions {
  std::filesystem::path pred_dir;
  std::filesystem::path truth_dir;
  std::filesystem::path out_dir;
  bool patlak = false;
  std::size_t patlak_frames = 8;
  std::size_t ki_samples = 50000;
  std::string ttest_pairing = "frame";
  std::uint64_t seed = 0;
};

struct RobustnessOptions {
  std::filesystem::path weights;
  std::filesystem::path image;
  std::filesystem::path truth;
  std::string mode = "shift";
  std::filesystem::path out;
};

struct CalibrateOptions {
  std::filesystem::path trace;
  std::filesystem::path samples;
  double delay_s = 0.0;
  std::string schedule = "standard";
  std::filesystem::path out_dir;
};

struct FeaturesOptions {
  std::filesystem::path weights;
  std::filesystem::path data_dir;
  std::filesystem::path out;
  bool tsne = false;
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateOptions& o);
void run_train(const TrainOptions& o);
void run_crossval(const TrainOptions& o);
void run_predict(const PredictOptions& o);
void run_evaluate(const EvaluateOptions& o);
void run_robustness(const RobustnessOptions& o);
void run_calibrate(const CalibrateOptions& o);
void run_features(const FeaturesOptions& o);

}  // namespace fcdlif::cli
