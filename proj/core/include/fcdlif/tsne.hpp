#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fcdlif {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  // Tolerance, in bits, of the per-point entropy match.
  double entropy_tolerance = 1e-5;
  std::uint64_t seed = 0;

  void validate(std::size_t points) const;
};

struct TsneResult {
  std::vector<std::array<double, 2>> coords;
  // |H_i - log2(perplexity)| in bits for every point.
  std::vector<double> entropy_error;
  double initial_kl = 0.0;
  double final_kl = 0.0;
};

// Exact t-SNE of `points` rows of `dims` features stored row-major.
TsneResult tsne_embed(std::span<const double> features, std::size_t points, std::size_t dims,
                      const TsneConfig& config = {});

// Mean silhouette coefficient of a 2D embedding under the given labels.
double silhouette(std::span<const std::array<double, 2>> coords, std::span<const int> labels);

}  // namespace fcdlif
