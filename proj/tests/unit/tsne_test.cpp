#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fcdlif/error.hpp"
#include "fcdlif/tsne.hpp"

using namespace fcdlif;

namespace {

struct Blobs {
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t points = 0, dims = 0;
};

Blobs two_blobs(std::size_t per_cluster, std::size_t dims, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Blobs b{{}, {}, 2 * per_cluster, dims};
  for (std::size_t i = 0; i < b.points; ++i) {
    const int label = static_cast<int>(i % 2);
    for (std::size_t d = 0; d < dims; ++d) b.features.push_back(n(rng) + (d == 0 ? gap * label : 0.0));
    b.labels.push_back(label);
  }
  return b;
}

}  // namespace

TEST(Tsne, ConditionalEntropyHitsPerplexity) {
  const auto b = two_blobs(40, 6, 5.0, 1);
  TsneConfig cfg;
  cfg.perplexity = 15;
  cfg.iterations = 50;
  const auto r = tsne_embed(b.features, b.points, b.dims, cfg);
  ASSERT_EQ(r.entropy_error.size(), b.points);
  for (double e : r.entropy_error) EXPECT_LT(std::abs(e), 1e-4);
}

TEST(Tsne, SeparatesTwoClusters) {
  const auto b = two_blobs(50, 8, 8.0, 2);
  TsneConfig cfg;
  cfg.perplexity = 20;
  cfg.iterations = 500;
  const auto r = tsne_embed(b.features, b.points, b.dims, cfg);
  EXPECT_GT(silhouette(r.coords, b.labels), 0.5);
  EXPECT_LT(r.final_kl, r.initial_kl);
}

TEST(Tsne, DeterministicPerSeed) {
  const auto b = two_blobs(20, 4, 3.0, 3);
  TsneConfig cfg;
  cfg.perplexity = 8;
  cfg.iterations = 120;
  cfg.seed = 9;
  const auto x = tsne_embed(b.features, b.points, b.dims, cfg);
  const auto y = tsne_embed(b.features, b.points, b.dims, cfg);
  EXPECT_EQ(x.coords, y.coords);
  cfg.seed = 10;
  EXPECT_NE(tsne_embed(b.features, b.points, b.dims, cfg).coords, x.coords);
}

TEST(Tsne, RejectsBadConfigurations) {
  const auto b = two_blobs(5, 3, 1.0, 4);
  TsneConfig cfg;
  cfg.perplexity = 30;
  EXPECT_THROW(tsne_embed(b.features, b.points, b.dims, cfg), ConfigError);
  cfg.perplexity = 3;
  EXPECT_THROW(tsne_embed(b.features, b.points + 1, b.dims, cfg), DimensionError);
  EXPECT_THROW(tsne_embed(std::vector<double>(8), 2, 4, cfg), ConfigError);
}

TEST(Silhouette, HandComputedLayout) {
  // Clusters {0, 1} and {10, 11} on a line.
  const std::vector<std::array<double, 2>> c{{0, 0}, {1, 0}, {10, 0}, {11, 0}};
  const std::vector<int> labels{0, 0, 1, 1};
  // point 0: a = 1, b = 10.5 -> 1 - 1/10.5; point 1: a = 1, b = 9.5 -> 1 - 1/9.5
  const double want = 0.5 * ((1 - 1 / 10.5) + (1 - 1 / 9.5));
  EXPECT_NEAR(silhouette(c, labels), want, 1e-12);
}
