#include <benchmark/benchmark.h>

#include <random>

#include "fcdlif/metrics.hpp"
#include "fcdlif/patlak.hpp"
#include "fcdlif/phantom.hpp"
#include "fcdlif/tsne.hpp"

using namespace fcdlif;

static void BM_Tsne(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(0);
  std::normal_distribution<double> g;
  std::vector<double> x(n * 16);
  for (auto& v : x) v = g(rng);
  TsneConfig cfg;
  cfg.perplexity = 20;
  cfg.iterations = 250;
  for (auto _ : state) benchmark::DoNotOptimize(tsne_embed(x, n, 16, cfg));
}
BENCHMARK(BM_Tsne)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_VoxelwisePatlak(benchmark::State& state) {
  const auto s = render_phantom(mouse_phantom({24, 16, 16}), FrameSchedule::standard(), FengParams{}, 0, kNoiseless);
  const auto window = FitWindow::last_frames(42);
  for (auto _ : state) benchmark::DoNotOptimize(voxelwise_patlak(s.image, s.aif.values, window));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.image.shape.numel()));
}
BENCHMARK(BM_VoxelwisePatlak)->Unit(benchmark::kMillisecond);

static void BM_Deming(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = 1.5 * x[i] + 0.2 * g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(orthogonal_regression(x, y));
}
BENCHMARK(BM_Deming)->Arg(1 << 12)->Arg(1 << 16);
