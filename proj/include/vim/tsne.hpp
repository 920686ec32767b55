// include/vim/tsne.hpp

// Copyright 2026  The vimeval authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VIM_TSNE_HPP
#define VIM_TSNE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "vim/error.hpp"
#include "vim/parallel.hpp"
#include "vim/rng.hpp"

namespace vim {

// Exact (O(N^2)) t-SNE.  The paper-scale inputs are a few hundred points, so
// no tree approximation is needed.
struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration_factor = 12.0;
  int early_exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  std::uint64_t seed = 0;
};

struct TsneIterationStats {
  int iteration = 0;       // 1-based
  double kl = 0.0;         // against the unexaggerated P
  double p_sum = 0.0;
  double q_sum = 0.0;
};

using TsneObserver = std::function<void(const TsneIterationStats &)>;

namespace tsne_detail {

inline constexpr double kTiny = std::numeric_limits<double>::min();

}  // namespace tsne_detail

// Row-major N x N squared Euclidean distances.
inline std::vector<double> pairwise_squared_distances(const std::vector<double> &x,
                                                      std::size_t n, std::size_t dim,
                                                      int threads = 1) {
  std::vector<double> d(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = x[i * dim + k] - x[j * dim + k];
        acc += diff * diff;
      }
      d[i * n + j] = acc;
    }
  });
  return d;
}

// Symmetrized input probabilities P (sums to 1).  Per-point Gaussian
// bandwidths are found by bisection on the precision beta so that the row
// entropy matches log(perplexity) within `tolerance`.
inline std::vector<double> tsne_input_probabilities(const std::vector<double> &distances,
                                                    std::size_t n, double perplexity,
                                                    double tolerance = 1e-5,
                                                    int threads = 1) {
  if (n < 4) fail(ErrorCode::InvalidConfig, "t-SNE needs at least 4 points");
  if (!(perplexity > 1.0)) fail(ErrorCode::InvalidConfig, "perplexity must be > 1");
  if (3.0 * perplexity >= static_cast<double>(n - 1)) {
    fail(ErrorCode::PerplexityTooLarge,
         "perplexity " + std::to_string(perplexity) + " too large for " +
             std::to_string(n) + " points (need perplexity < (N-1)/3)");
  }
  bool any_positive = false;
  for (std::size_t i = 0; i < n && !any_positive; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (distances[i * n + j] > 0.0) {
        any_positive = true;
        break;
      }
    }
  }
  if (!any_positive) {
    fail(ErrorCode::DegenerateDistances, "all pairwise distances are zero");
  }

  const double target_entropy = std::log(perplexity);
  std::vector<double> p(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    double beta = 1.0;
    double beta_min = -std::numeric_limits<double>::infinity();
    double beta_max = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      sum = tsne_detail::kTiny;
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          p[i * n + j] = 0.0;
          continue;
        }
        const double v = std::exp(-beta * distances[i * n + j]);
        p[i * n + j] = v;
        sum += v;
        weighted += beta * distances[i * n + j] * v;
      }
      const double entropy = weighted / sum + std::log(sum);
      const double diff = entropy - target_entropy;
      if (std::abs(diff) < tolerance) break;
      if (diff > 0) {
        beta_min = beta;
        beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
      } else {
        beta_max = beta;
        beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] /= sum;
  });

  // symmetrize and normalize to a joint distribution
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (p[i * n + j] + p[j * n + i]) / (2.0 * static_cast<double>(n));
      p[i * n + j] = v;
      p[j * n + i] = v;
    }
    p[i * n + i] = 0.0;
  }
  return p;
}

// Student-t joint probabilities for the embedding Y (N x 2); returns the
// normalized Q and the raw kernel weights w_ij = 1/(1+d2).
inline void tsne_low_dim_probabilities(const std::vector<double> &y, std::size_t n,
                                       std::vector<double> &weights,
                                       std::vector<double> &q) {
  weights.assign(n * n, 0.0);
  q.assign(n * n, 0.0);
  double sum = tsne_detail::kTiny;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i * 2] - y[j * 2];
      const double dy = y[i * 2 + 1] - y[j * 2 + 1];
      const double w = 1.0 / (1.0 + dx * dx + dy * dy);
      weights[i * n + j] = w;
      weights[j * n + i] = w;
      sum += 2.0 * w;
    }
  }
  for (std::size_t k = 0; k < n * n; ++k) q[k] = weights[k] / sum;
}

// KL(P || Q(Y)); zero P entries contribute nothing.
inline double tsne_kl(const std::vector<double> &p, const std::vector<double> &y,
                      std::size_t n) {
  std::vector<double> weights, q;
  tsne_low_dim_probabilities(y, n, weights, q);
  double kl = 0.0;
  for (std::size_t k = 0; k < n * n; ++k) {
    if (p[k] > 0.0) kl += p[k] * std::log(p[k] / (q[k] + tsne_detail::kTiny));
  }
  return kl;
}

// Analytic gradient of KL(exaggeration*P || Q) w.r.t. Y:
//   dC/dy_i = 4 sum_j (ex*p_ij - q_ij) * w_ij * (y_i - y_j)
inline void tsne_gradient(const std::vector<double> &p, const std::vector<double> &y,
                          std::size_t n, double exaggeration,
                          std::vector<double> &grad, std::vector<double> &weights,
                          std::vector<double> &q) {
  tsne_low_dim_probabilities(y, n, weights, q);
  grad.assign(n * 2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double gx = 0.0, gy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double mult =
          (exaggeration * p[i * n + j] - q[i * n + j]) * weights[i * n + j];
      gx += mult * (y[i * 2] - y[j * 2]);
      gy += mult * (y[i * 2 + 1] - y[j * 2 + 1]);
    }
    grad[i * 2] = 4.0 * gx;
    grad[i * 2 + 1] = 4.0 * gy;
  }
}

// Full run: bisection-calibrated P, seeded Gaussian init (per-point streams),
// momentum gradient descent with early exaggeration.  Returns N x 2 points.
inline std::vector<double> tsne(const std::vector<double> &x, std::size_t n,
                                std::size_t dim, const TsneConfig &config,
                                const TsneObserver &observer = {}, int threads = 1) {
  if (n == 0) fail(ErrorCode::EmptyInput, "t-SNE on empty input");
  const auto distances = pairwise_squared_distances(x, n, dim, threads);
  const auto p = tsne_input_probabilities(distances, n, config.perplexity, 1e-5, threads);

  std::vector<double> y(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(config.seed, "tsne-init", i));
    y[i * 2] = 1e-4 * rng.normal();
    y[i * 2 + 1] = 1e-4 * rng.normal();
  }

  std::vector<double> velocity(n * 2, 0.0);
  std::vector<double> grad, weights, q;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    const double exaggeration =
        iter <= config.early_exaggeration_iters ? config.early_exaggeration_factor : 1.0;
    const double momentum =
        iter < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
    tsne_gradient(p, y, n, exaggeration, grad, weights, q);
    for (std::size_t k = 0; k < n * 2; ++k) {
      velocity[k] = momentum * velocity[k] - config.learning_rate * grad[k];
      y[k] += velocity[k];
    }
    // re-center to keep the embedding translation-free
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[i * 2];
      my += y[i * 2 + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i * 2] -= mx;
      y[i * 2 + 1] -= my;
    }
    if (observer) {
      TsneIterationStats stats;
      stats.iteration = iter;
      stats.kl = tsne_kl(p, y, n);
      for (std::size_t k = 0; k < n * n; ++k) stats.p_sum += p[k];
      tsne_low_dim_probabilities(y, n, weights, q);
      for (std::size_t k = 0; k < n * n; ++k) stats.q_sum += q[k];
      observer(stats);
    }
  }
  return y;
}

}  // namespace vim

#endif  // VIM_TSNE_HPP
