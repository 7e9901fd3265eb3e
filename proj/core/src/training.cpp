#include "fcdlif/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "fcdlif/adam.hpp"
#include "fcdlif/error.hpp"
#include "fcdlif/metrics.hpp"
#include "fcdlif/random.hpp"

namespace fcdlif {
namespace {

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

std::vector<std::vector<float>> snapshot(const InputFunctionModel& model) {
  std::vector<std::vector<float>> out;
  for (const auto& p : model.parameters()) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void restore(InputFunctionModel& model, const std::vector<std::vector<float>>& values) {
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    std::copy(values[i].begin(), values[i].end(), t.mutable_values().begin());
  }
}

double validation_wmse(const InputFunctionModel& model, std::span<const Sample> validation) {
  if (validation.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& s : validation) {
    const auto pred = predict(model, s.image);
    total += weighted_mse(pred, s.aif, LossWeights::for_length(pred.size()));
  }
  return total / static_cast<double>(validation.size());
}

}  // namespace

LossWeights LossWeights::for_length(std::size_t frames) {
  if (frames == 0) throw ConfigError("loss weights need at least one frame");
  LossWeights w;
  if (frames == 42) return w;
  const double t = static_cast<double>(frames);
  w.peak_frames = std::min(frames, round_half_up(25.0 * t / 42.0));
  w.intermediate_frames = std::min(frames - w.peak_frames, round_half_up(9.0 * t / 42.0));
  w.tail_frames = frames - w.peak_frames - w.intermediate_frames;
  return w;
}

std::vector<double> LossWeights::per_frame() const {
  std::vector<double> w;
  w.reserve(length());
  w.insert(w.end(), peak_frames, peak_weight);
  w.insert(w.end(), intermediate_frames, intermediate_weight);
  w.insert(w.end(), tail_frames, tail_weight);
  return w;
}

double weighted_mse(std::span<const double> prediction, std::span<const double> target, const LossWeights& weights) {
  if (prediction.size() != target.size() || prediction.size() != weights.length()) {
    throw DimensionError("weighted_mse: lengths differ (prediction " + std::to_string(prediction.size()) + ", target " +
                         std::to_string(target.size()) + ", weights " + std::to_string(weights.length()) + ")");
  }
  const auto w = weights.per_frame();
  double total = 0.0;
  for (std::size_t t = 0; t < prediction.size(); ++t) {
    const double r = prediction[t] - target[t];
    total += w[t] * r * r;
  }
  return total / static_cast<double>(prediction.size());
}

double weighted_mse(const InputFunction& prediction, const InputFunction& target, const LossWeights& weights) {
  return weighted_mse(prediction.values, target.values, weights);
}

DynamicPetImage poisson_augment(const DynamicPetImage& image, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p > 1.0) throw ConfigError("poisson_augment: p must lie in [0, 1]");
  DynamicPetImage out = image;
  if (p == 0.0) return out;
  for (auto& v : out.voxels) {
    const double rate = std::max(0.0, static_cast<double>(v)) * p;
    if (rate == 0.0) continue;
    std::poisson_distribution<long long> pois(rate);
    v = static_cast<float>(static_cast<double>(v) + (static_cast<double>(pois(rng)) - rate));
  }
  return out;
}

AugmentationDraw poisson_augment(const DynamicPetImage& image, std::mt19937_64& rng) {
  const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return {p, poisson_augment(image, p, rng)};
}

std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold_split: need at least 2 folds");
  if (n < k) throw ConfigError("kfold_split: " + std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Fold> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].validation.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                               order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].validation.begin(), folds[f].validation.end());
    pos += size;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].validation.begin(), folds[g].validation.end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("training needs at least one epoch");
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (runs < 1) throw ConfigError("cross-validation needs at least one run per fold");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

TrainResult train(InputFunctionModel& model, std::span<const Sample> training, std::span<const Sample> validation,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.epochs < 1) throw ConfigError("training needs at least one epoch");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (training.empty()) throw ConfigError("training set is empty");
  const auto& expected = model.config().sfe.input_shape;
  for (const auto* set : {&training, &validation}) {
    for (const auto& s : *set) {
      if (!(s.image.shape == expected)) {
        throw DimensionError("sample '" + s.id + "' has spatial shape " + to_string(s.image.shape) +
                             ", model expects " + to_string(expected));
      }
      if (s.aif.size() != s.image.frame_count()) {
        throw DimensionError("sample '" + s.id + "': AIF length differs from the frame count");
      }
    }
  }

  auto params = model.parameter_tensors();
  const auto names = model.parameter_names();
  AdamState adam(params, AdamOptions{.learning_rate = config.learning_rate});

  TrainResult result;
  result.best_validation_wmse = std::numeric_limits<double>::infinity();
  std::vector<std::vector<float>> best = snapshot(model);

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, epoch, 0x5eed));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (const auto i : order) {
      const auto& s = training[i];
      const auto weights = LossWeights::for_length(s.aif.size()).per_frame();
      for (auto& p : params) p.zero_grad();
      double loss_value = 0.0;
      try {
        Tensor pred;
        if (config.augment) {
          std::mt19937_64 aug_rng(derive_seed(config.seed ^ 0xa5a5a5a5ULL, epoch, i));
          pred = model.forward(poisson_augment(s.image, aug_rng).image);
        } else {
          pred = model.forward(s.image);
        }
        const Tensor loss = ops::weighted_mse(pred, s.aif.values, weights);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) throw NumericError("non-finite loss");
        backward(loss);
        adam_step(params, names, adam);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", sample '" + s.id +
                           "': " + e.what());
      }
      epoch_loss += loss_value;
    }

    EpochRecord rec{epoch, epoch_loss / static_cast<double>(training.size()), validation_wmse(model, validation)};
    result.history.push_back(rec);
    const double score = validation.empty() ? -static_cast<double>(epoch) : rec.validation_wmse;
    if (score < result.best_validation_wmse || validation.empty()) {
      result.best_validation_wmse = validation.empty() ? rec.validation_wmse : score;
      result.best_epoch = epoch;
      best = snapshot(model);
    }
    if (on_epoch) on_epoch(rec);
  }
  restore(model, best);
  return result;
}

std::vector<CurveSummary> CrossValidationResult::summarize() const {
  std::vector<CurveSummary> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<const CrossValidationJob*> runs;
    for (const auto& j : jobs) {
      if (j.fold == f) runs.push_back(&j);
    }
    if (runs.empty()) continue;
    const auto& validation = folds[f].validation;
    for (std::size_t v = 0; v < validation.size(); ++v) {
      const std::size_t len = runs.front()->predictions[v].size();
      CurveSummary s{validation[v], f, std::vector<double>(len, 0.0), std::vector<double>(len, 0.0)};
      for (std::size_t t = 0; t < len; ++t) {
        double mean = 0.0;
        for (const auto* r : runs) mean += r->predictions[v].values[t];
        mean /= static_cast<double>(runs.size());
        double ss = 0.0;
        for (const auto* r : runs) ss += (r->predictions[v].values[t] - mean) * (r->predictions[v].values[t] - mean);
        s.mean[t] = mean;
        s.stddev[t] = runs.size() > 1 ? std::sqrt(ss / static_cast<double>(runs.size() - 1)) : 0.0;
      }
      out.push_back(std::move(s));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sample < b.sample; });
  return out;
}

CrossValidationResult cross_validate(std::span<const Sample> dataset, const TrainConfig& config,
                                     const ModelFactory& factory) {
  config.validate();
  if (dataset.empty()) throw ConfigError("cross_validate: empty dataset");
  CrossValidationResult result;
  result.folds = kfold_split(dataset.size(), config.folds, config.seed);
  for (std::size_t f = 0; f < config.folds; ++f) {
    for (std::size_t r = 0; r < config.runs; ++r) {
      CrossValidationJob job;
      job.fold = f;
      job.run = r;
      job.seed = derive_seed(config.seed, f, r);
      job.validation = result.folds[f].validation;
      result.jobs.push_back(std::move(job));
    }
  }

  auto run_job = [&](CrossValidationJob& job) {
    const auto& fold = result.folds[job.fold];
    std::vector<Sample> train_set, val_set;
    for (auto i : fold.train) train_set.push_back(dataset[i]);
    for (auto i : fold.validation) val_set.push_back(dataset[i]);
    job.model = factory(job.seed);
    TrainConfig cfg = config;
    cfg.seed = job.seed;
    job.training = train(*job.model, train_set, val_set, cfg);
    for (const auto& s : val_set) job.predictions.push_back(predict(*job.model, s.image));
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, result.jobs.size()));
  if (threads == 1) {
    for (auto& job : result.jobs) run_job(job);
  } else {
    std::vector<std::exception_ptr> errors(result.jobs.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < result.jobs.size(); j += threads) {
          try {
            run_job(result.jobs[j]);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (const auto& job : result.jobs) {
    for (std::size_t v = 0; v < job.validation.size(); ++v) {
      const auto& s = dataset[job.validation[v]];
      const auto& pred = job.predictions[v];
      result.records.push_back({job.fold, job.run, job.validation[v], s.id, mse(pred.values, s.aif.values),
                                mbe(pred.values, s.aif.values),
                                weighted_mse(pred, s.aif, LossWeights::for_length(pred.size()))});
    }
  }
  return result;
}

}  // namespace fcdlif
