#include <benchmark/benchmark.h>

#include <random>

#include "fcdlif/ops.hpp"
#include "fcdlif/tensor.hpp"

using namespace fcdlif;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), grad);
}

}  // namespace

// Stem convolution of the desk model: C_in -> C_out over a 24x16x16 volume.
static void BM_Conv3dForward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({cin, 24, 16, 16}, 1);
  const auto k = random_tensor({cout, cin, 3, 3, 3}, 2);
  const auto b = random_tensor({cout}, 3);
  ops::Conv3dOptions opt;
  opt.padding = {1, 1, 1};
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv3d(x, k, b, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cin * cout * 27 * 24 * 16 * 16));
}
BENCHMARK(BM_Conv3dForward)->Args({1, 4})->Args({4, 4})->Args({8, 8});

static void BM_Conv3dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  auto x = random_tensor({c, 24, 16, 16}, 1, true);
  auto k = random_tensor({c, c, 3, 3, 3}, 2, true);
  auto b = random_tensor({c}, 3, true);
  ops::Conv3dOptions opt;
  opt.padding = {1, 1, 1};
  for (auto _ : state) {
    backward(ops::sum(ops::conv3d(x, k, b, opt)));
    x.zero_grad();
    k.zero_grad();
    b.zero_grad();
  }
}
BENCHMARK(BM_Conv3dBackward)->Arg(4)->Arg(8);

static void BM_Conv1dSame(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({32, t}, 1);
  const auto k = random_tensor({16, 32, 5}, 2);
  const auto b = random_tensor({16}, 3);
  ops::Conv1dOptions opt;
  opt.padding = 2;
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv1d(x, k, b, opt));
}
BENCHMARK(BM_Conv1dSame)->Arg(42)->Arg(128);

static void BM_InstanceNorm(benchmark::State& state) {
  const auto x = random_tensor({8, 24, 16, 16}, 1);
  const auto scale = Tensor::full({8}, 1.0f);
  const auto shift = Tensor::zeros({8});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::instance_norm(x, scale, shift));
}
BENCHMARK(BM_InstanceNorm);
BENCHMARK_MAIN();
