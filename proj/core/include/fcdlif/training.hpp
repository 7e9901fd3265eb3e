#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fcdlif/image.hpp"
#include "fcdlif/model.hpp"

namespace fcdlif {

// Peak / intermediate / tail frame weighting. For 42 frames the segments are
// 25 / 9 / 8 frames; other lengths scale the first two proportionally
// (round half up) and the tail absorbs the remainder.
struct LossWeights {
  std::size_t peak_frames = 25;
  std::size_t intermediate_frames = 9;
  std::size_t tail_frames = 8;
  double peak_weight = 0.4;
  double intermediate_weight = 0.7;
  double tail_weight = 1.0;

  static LossWeights for_length(std::size_t frames);

  std::size_t length() const { return peak_frames + intermediate_frames + tail_frames; }
  std::vector<double> per_frame() const;
};

// (1/T) sum_t w_t (pred_t - target_t)^2
double weighted_mse(std::span<const double> prediction, std::span<const double> target, const LossWeights& weights);
double weighted_mse(const InputFunction& prediction, const InputFunction& target, const LossWeights& weights);

struct AugmentationDraw {
  double p = 0.0;
  DynamicPetImage image;
};

// I + Pois(I p) - I p with one p ~ U(0,1) per image. Negative voxels are
// clamped to zero for the Poisson rate only.
AugmentationDraw poisson_augment(const DynamicPetImage& image, std::mt19937_64& rng);
// Same with a fixed p.
DynamicPetImage poisson_augment(const DynamicPetImage& image, double p, std::mt19937_64& rng);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Shuffled partition of [0, n) into k validation sets whose sizes differ by
// at most one.
std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 1e-4;
  std::size_t folds = 10;
  std::size_t runs = 10;
  bool augment = true;
  std::uint64_t seed = 0;
  // Parallel (fold, run) jobs in cross_validate; each job stays single-threaded.
  std::size_t threads = 1;

  void validate() const;
};

struct Sample {
  std::string id;
  DynamicPetImage image;
  InputFunction aif;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_wmse = 0.0;
  double validation_wmse = 0.0;  // NaN without a validation set
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_wmse = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Batch-size-1 ADAM on the weighted MSE. Validation data is never augmented
// or modified. On return the model holds the parameters of the epoch with the
// lowest validation wMSE (the last epoch when `validation` is empty).
TrainResult train(InputFunctionModel& model, std::span<const Sample> training, std::span<const Sample> validation,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

using ModelFactory = std::function<std::unique_ptr<InputFunctionModel>(std::uint64_t seed)>;

struct HeldOutRecord {
  std::size_t fold = 0;
  std::size_t run = 0;
  std::size_t sample = 0;
  std::string id;
  double mse = 0.0;
  double mbe = 0.0;
  double wmse = 0.0;
};

struct CrossValidationJob {
  std::size_t fold = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  TrainResult training;
  std::vector<std::size_t> validation;
  std::vector<InputFunction> predictions;  // aligned with `validation`
  std::unique_ptr<InputFunctionModel> model;
};

struct CurveSummary {
  std::size_t sample = 0;
  std::size_t fold = 0;
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation across runs
};

struct CrossValidationResult {
  std::vector<Fold> folds;
  std::vector<CrossValidationJob> jobs;  // fold-major, run-minor
  std::vector<HeldOutRecord> records;

  // Mean curve and standard deviation across runs for every held-out sample.
  std::vector<CurveSummary> summarize() const;
};

// Trains folds x runs models; job (f, r) uses seed derive_seed(config.seed, f, r).
CrossValidationResult cross_validate(std::span<const Sample> dataset, const TrainConfig& config,
                                     const ModelFactory& factory);

}  // namespace fcdlif
