#include <benchmark/benchmark.h>

#include <random>

#include "fcdlif/model.hpp"
#include "fcdlif/phantom.hpp"
#include "fcdlif/training.hpp"

using namespace fcdlif;

namespace {

const RenderedSample& desk_subject() {
  static const RenderedSample s = [] {
    DatasetOptions d;
    d.count = 1;
    d.seed = 1;
    return simulate_subject(d, 0).sample;
  }();
  return s;
}

}  // namespace

static void BM_DeskForward(benchmark::State& state) {
  const auto model = build_model({ModelKind::fcdlif, desk_config()}, 0);
  const auto& s = desk_subject();
  for (auto _ : state) benchmark::DoNotOptimize(predict(*model, s.image));
}
BENCHMARK(BM_DeskForward)->Unit(benchmark::kMillisecond);

// One optimizer step: forward, backward and ADAM on a 42-frame subject.
static void BM_DeskTrainingStep(benchmark::State& state) {
  auto model = build_model({ModelKind::fcdlif, desk_config()}, 0);
  const auto& s = desk_subject();
  std::vector<Sample> data{{"s", s.image, s.aif}};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.augment = false;
  for (auto _ : state) benchmark::DoNotOptimize(train(*model, data, {}, cfg));
}
BENCHMARK(BM_DeskTrainingStep)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
  DatasetOptions d;
  d.count = 1;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_subject(d, i++));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

static void BM_PoissonAugment(benchmark::State& state) {
  const auto& s = desk_subject();
  std::mt19937_64 rng(0);
  for (auto _ : state) benchmark::DoNotOptimize(poisson_augment(s.image, 0.5, rng));
}
BENCHMARK(BM_PoissonAugment)->Unit(benchmark::kMillisecond);
