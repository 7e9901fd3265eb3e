#include "fcdlif/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "fcdlif/error.hpp"

namespace fcdlif {
namespace {

constexpr double kMinDistance = 1e-12;
constexpr double kMinProbability = 1e-12;

// Conditional row p_{j|i} matching the target entropy (bits) by bisection on
// the Gaussian precision. Returns the achieved entropy.
double fit_row(std::span<const double> dist, std::size_t self, double target_bits, double tolerance,
               std::span<double> row) {
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (j != self) dmin = std::min(dmin, dist[j]);
  }
  double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
  double entropy = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    double sum = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      if (j == self) {
        row[j] = 0.0;
        continue;
      }
      const double shifted = dist[j] - dmin;
      row[j] = std::exp(-beta * shifted);
      sum += row[j];
      weighted += shifted * row[j];
    }
    entropy = (std::log(sum) + beta * weighted / sum) / std::log(2.0);
    for (auto& v : row) v /= sum;
    const double diff = entropy - target_bits;
    if (std::abs(diff) < tolerance) break;
    if (diff > 0.0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = 0.5 * (beta + lo);
    }
  }
  return entropy;
}

double kl_divergence(const std::vector<double>& p, const std::vector<std::array<double, 2>>& y) {
  const std::size_t n = y.size();
  double qsum = 0.0;
  std::vector<double> num(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      num[i * n + j] = num[j * n + i] = v;
      qsum += 2.0 * v;
    }
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < n * n; ++k) {
    if (p[k] > 0.0) kl += p[k] * std::log(p[k] / std::max(num[k] / qsum, kMinProbability));
  }
  return kl;
}

}  // namespace

void TsneConfig::validate(std::size_t points) const {
  if (points < 5) throw ConfigError("t-SNE needs at least 5 points");
  if (!(perplexity > 0.0) || perplexity >= static_cast<double>(points)) {
    throw ConfigError("t-SNE perplexity must lie in (0, " + std::to_string(points) + ")");
  }
  if (iterations < 1) throw ConfigError("t-SNE needs at least one iteration");
  if (!(learning_rate > 0.0)) throw ConfigError("t-SNE learning rate must be positive");
}

TsneResult tsne_embed(std::span<const double> features, std::size_t points, std::size_t dims,
                      const TsneConfig& config) {
  config.validate(points);
  if (dims == 0 || features.size() != points * dims) {
    throw DimensionError("t-SNE: feature buffer holds " + std::to_string(features.size()) + " values, expected " +
                         std::to_string(points) + " x " + std::to_string(dims));
  }
  const std::size_t n = points;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double diff = features[i * dims + k] - features[j * dims + k];
        d += diff * diff;
      }
      dist[i * n + j] = dist[j * n + i] = std::max(d, kMinDistance);
    }
  }

  TsneResult result;
  result.entropy_error.resize(n);
  const double target = std::log2(config.perplexity);
  std::vector<double> cond(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = fit_row(std::span(dist).subspan(i * n, n), i, target, config.entropy_tolerance,
                             std::span(cond).subspan(i * n, n));
    result.entropy_error[i] = std::abs(h - target);
  }
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * static_cast<double>(n)),
                                          kMinProbability);
    }
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  auto& y = result.coords;
  y.resize(n);
  for (auto& c : y) c = {init(rng), init(rng)};
  result.initial_kl = kl_divergence(p, y);

  std::vector<std::array<double, 2>> velocity(n, {0.0, 0.0}), gains(n, {1.0, 1.0}), grad(n);
  std::vector<double> num(n * n, 0.0);
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const bool early = iter < config.exaggeration_iterations;
    const double exaggeration = early ? config.exaggeration : 1.0;
    const double momentum = early ? config.initial_momentum : config.final_momentum;
    double qsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = v;
        qsum += 2.0 * v;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = {0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double v = num[i * n + j];
        const double q = std::max(v / qsum, kMinProbability);
        const double coeff = 4.0 * (exaggeration * p[i * n + j] - q) * v;
        grad[i][0] += coeff * (y[i][0] - y[j][0]);
        grad[i][1] += coeff * (y[i][1] - y[j][1]);
      }
    }
    std::array<double, 2> mean{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 2; ++d) {
        auto& g = gains[i][d];
        g = (grad[i][d] > 0.0) != (velocity[i][d] > 0.0) ? g + 0.2 : g * 0.8;
        g = std::max(g, 0.01);
        velocity[i][d] = momentum * velocity[i][d] - config.learning_rate * g * grad[i][d];
        y[i][d] += velocity[i][d];
        mean[d] += y[i][d];
      }
    }
    for (auto& c : y) {
      c[0] -= mean[0] / static_cast<double>(n);
      c[1] -= mean[1] / static_cast<double>(n);
    }
  }
  result.final_kl = kl_divergence(p, y);
  return result;
}

double silhouette(std::span<const std::array<double, 2>> coords, std::span<const int> labels) {
  if (coords.size() != labels.size()) throw DimensionError("silhouette: coordinate and label counts differ");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw ConfigError("silhouette: need at least two clusters");
  double total = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    std::map<int, double> sums;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (i == j) continue;
      sums[labels[j]] += std::hypot(coords[i][0] - coords[j][0], coords[i][1] - coords[j][1]);
    }
    const std::size_t own = sizes[labels[i]];
    if (own < 2) continue;
    const double a = sums[labels[i]] / static_cast<double>(own - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, sum] : sums) {
      if (label != labels[i]) b = std::min(b, sum / static_cast<double>(sizes[label]));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(coords.size());
}

}  // namespace fcdlif
