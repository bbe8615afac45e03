// Copyright 2026 The nesqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nesqc/errors.hpp"
#include "nesqc/linalg.hpp"
#include "nesqc/parallel.hpp"
#include "nesqc/rng.hpp"
#include "nesqc/trace.hpp"

namespace nesqc {

// ---------------------------------------------------------------------------
// Hyperparameters

/// Mean, scale/shape and per-coordinate deviation learning rates.
struct LearningRates {
  double eta_mu = 1.0;
  double eta_s = 1.0;     // xNES global scale
  double eta_B = 1.0;     // xNES shape matrix
  double eta_sigma = 1.0; // sNES deviation vector
};

/**
 * Standard NES rates for a d-dimensional search (natural log):
 * eta_mu = 1, eta_s = eta_B = (9 + 3 ln d) / (5 d sqrt d),
 * eta_sigma = (3 + ln d) / (5 d sqrt d).
 */
inline LearningRates default_learning_rates(std::size_t d) {
  if (d == 0) {
    throw InvalidDimensionError("learning rates need d >= 1");
  }
  const double dd = static_cast<double>(d);
  const double denom = 5.0 * dd * std::sqrt(dd);
  const double eta_s = (9.0 + 3.0 * std::log(dd)) / denom;
  return {1.0, eta_s, eta_s, (3.0 + std::log(dd)) / denom};
}

/// round(4 + 3 ln d).
inline std::size_t default_population(std::size_t d) {
  if (d == 0) {
    throw InvalidDimensionError("population needs d >= 1");
  }
  return static_cast<std::size_t>(
      std::lround(4.0 + 3.0 * std::log(static_cast<double>(d))));
}

/**
 * Rank-based fitness shaping weights, best rank first:
 *
 *     u_n = max(0, ln(k/2 + 1) - ln n) / sum_j max(0, ln(k/2 + 1) - ln j) - 1/k
 */
inline std::vector<double> compute_utilities(std::size_t k) {
  if (k < 2) {
    throw InvalidPopulationError("utilities need at least 2 walkers");
  }
  const double kk = static_cast<double>(k);
  const double top = std::log(kk / 2.0 + 1.0);
  std::vector<double> raw(k);
  for (std::size_t n = 1; n <= k; ++n) {
    raw[n - 1] = std::max(0.0, top - std::log(static_cast<double>(n)));
  }
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  std::vector<double> u(k);
  for (std::size_t n = 0; n < k; ++n) {
    u[n] = raw[n] / total - 1.0 / kk;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Search distributions

/// N(mu, sigma^2 I) with a fixed sigma.
struct Isotropic {
  Vector mu;
  double sigma = 0.1;
};

/// N(mu, diag(sigma)^2).
struct Separable {
  Vector mu;
  Vector sigma;
};

/// N(mu, sigma^2 B B^T) with |det B| = 1.
struct Full {
  Vector mu;
  double sigma = 0.1;
  DenseMatrix shape;

  /// Covariance factor A = sigma * B.
  static Full from_factor(Vector mu, const DenseMatrix &factor) {
    if (factor.rows() != mu.size()) {
      throw InvalidDimensionError("covariance factor does not match mean");
    }
    auto [sigma, shape] = scale_from_factor(factor);
    return {std::move(mu), sigma, std::move(shape)};
  }

  [[nodiscard]] DenseMatrix covariance() const {
    return sigma * sigma * shape * shape.transpose();
  }
};

using SearchDistribution = std::variant<Isotropic, Separable, Full>;

inline const Vector &mean(const SearchDistribution &dist) {
  return std::visit([](const auto &d) -> const Vector & { return d.mu; }, dist);
}

/**
 * Stopping statistic: sigma (isotropic), max of the sigma vector
 * (separable), max absolute entry of sigma^2 B B^T (full).
 */
inline double spread(const SearchDistribution &dist) {
  struct Visitor {
    double operator()(const Isotropic &d) const { return d.sigma; }
    double operator()(const Separable &d) const { return d.sigma.maxCoeff(); }
    double operator()(const Full &d) const {
      return d.covariance().cwiseAbs().maxCoeff();
    }
  };
  return std::visit(Visitor{}, dist);
}

// ---------------------------------------------------------------------------
// Configuration

/// Canonical ES update: vanilla search gradient or Fisher-preconditioned.
enum class CanonicalUpdate { Plain, Natural };

struct NesConfig {
  std::size_t population = 16;
  /// Overrides default_learning_rates(d) when set.
  std::optional<LearningRates> rates;
  std::size_t max_iterations = 1000;
  double stop_threshold = 1e-8;
  /// Walker evaluation threads; results do not depend on this value.
  std::size_t threads = 1;
  CanonicalUpdate canonical_update = CanonicalUpdate::Plain;

  [[nodiscard]] LearningRates resolved_rates(std::size_t d) const {
    return rates ? *rates : default_learning_rates(d);
  }
};

// ---------------------------------------------------------------------------
// Walkers

/// Column n holds walker n: s_n in `samples`, z_n in `points`.
struct WalkerBatch {
  DenseMatrix samples;
  DenseMatrix points;
  Vector fitness;

  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(samples.cols());
  }
};

/// Stream n of `seed` belongs to walker n for the whole run.
inline std::vector<SeededRng> walker_streams(std::uint64_t seed, std::size_t k) {
  std::vector<SeededRng> streams;
  streams.reserve(k);
  for (std::size_t n = 0; n < k; ++n) {
    streams.emplace_back(seed, n);
  }
  return streams;
}

/// Maps local-coordinate samples to task coordinates; fitness left NaN.
inline WalkerBatch map_samples(const SearchDistribution &dist,
                               DenseMatrix samples) {
  const Vector &mu = mean(dist);
  if (samples.rows() != mu.size()) {
    throw InvalidDimensionError("sample dimension does not match distribution");
  }
  DenseMatrix points(samples.rows(), samples.cols());
  struct Visitor {
    const DenseMatrix &s;
    DenseMatrix &z;
    void operator()(const Isotropic &d) const {
      z = (d.sigma * s).colwise() + d.mu;
    }
    void operator()(const Separable &d) const {
      z = (s.array().colwise() * d.sigma.array()).matrix().colwise() + d.mu;
    }
    void operator()(const Full &d) const {
      z = (d.sigma * (d.shape * s)).colwise() + d.mu;
    }
  };
  std::visit(Visitor{samples, points}, dist);
  Vector fitness = Vector::Constant(samples.cols(), std::nan(""));
  return {std::move(samples), std::move(points), std::move(fitness)};
}

/// One standard-normal sample per stream, mapped through the distribution.
inline WalkerBatch sample_walkers(const SearchDistribution &dist,
                                  std::span<SeededRng> streams) {
  if (streams.empty()) {
    throw InvalidPopulationError("need at least one walker");
  }
  const auto d = static_cast<std::size_t>(mean(dist).size());
  DenseMatrix samples(static_cast<Eigen::Index>(d),
                      static_cast<Eigen::Index>(streams.size()));
  for (std::size_t n = 0; n < streams.size(); ++n) {
    samples.col(static_cast<Eigen::Index>(n)) =
        sample_standard_normal_vector(streams[n], d);
  }
  return map_samples(dist, std::move(samples));
}

/// Fills batch.fitness by calling fitness(z_n); walkers may run concurrently.
template <class Fitness>
void evaluate_walkers(WalkerBatch &batch, Fitness &&fitness,
                      std::size_t threads = 1) {
  const auto rows = static_cast<std::size_t>(batch.points.rows());
  parallel_for(batch.size(), threads, [&](std::size_t n) {
    const double *col = batch.points.col(static_cast<Eigen::Index>(n)).data();
    batch.fitness[static_cast<Eigen::Index>(n)] =
        fitness(std::span<const double>(col, rows));
  });
}

namespace detail {

inline void require_finite_fitness(const WalkerBatch &batch) {
  if (batch.fitness.size() != batch.samples.cols()) {
    throw EvaluationError("fitness count does not match walker count");
  }
  for (Eigen::Index n = 0; n < batch.fitness.size(); ++n) {
    if (!std::isfinite(batch.fitness[n])) {
      throw EvaluationError("walker " + std::to_string(n) +
                            " has non-finite fitness");
    }
  }
}

} // namespace detail

/// Walker indices ordered best (lowest fitness) first; ties keep index order.
inline std::vector<std::size_t> rank_walkers(const Vector &fitness) {
  std::vector<std::size_t> order(static_cast<std::size_t>(fitness.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitness[static_cast<Eigen::Index>(a)] <
           fitness[static_cast<Eigen::Index>(b)];
  });
  return order;
}

/// Utility of each walker (walker-indexed) after ranking by fitness.
inline Vector walker_utilities(const Vector &fitness) {
  const auto k = static_cast<std::size_t>(fitness.size());
  const auto u = compute_utilities(k);
  const auto order = rank_walkers(fitness);
  Vector out(fitness.size());
  for (std::size_t r = 0; r < k; ++r) {
    out[static_cast<Eigen::Index>(order[r])] = u[r];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical ES

/// (1 / (k sigma)) sum_n f(z_n) s_n.
inline Vector canonical_gradient_estimate(const WalkerBatch &batch,
                                          double sigma_init) {
  if (!(sigma_init > 0.0)) {
    throw InvalidScaleError("sigma_init must be positive");
  }
  detail::require_finite_fitness(batch);
  const double k = static_cast<double>(batch.size());
  return batch.samples * batch.fitness / (k * sigma_init);
}

/**
 * Empirical Fisher matrix of the mean block of N(mu, sigma^2 I):
 * (1/k) sum_n g_n g_n^T with g_n = s_n / sigma.
 */
inline DenseMatrix estimate_fisher(const DenseMatrix &samples, double sigma) {
  if (!(sigma > 0.0)) {
    throw InvalidScaleError("sigma must be positive");
  }
  const DenseMatrix scores = samples / sigma;
  return scores * scores.transpose() / static_cast<double>(samples.cols());
}

/// Ridge added to an ill-conditioned Fisher matrix before solving.
inline constexpr double kFisherRidge = 1e-8;

/// F^{-1} g, with F + ridge I when F is singular or badly conditioned.
inline Vector apply_inverse_fisher(const DenseMatrix &fisher, const Vector &grad) {
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(fisher);
  const auto &vals = eig.eigenvalues();
  const double hi = vals.cwiseAbs().maxCoeff();
  const bool ill = vals.minCoeff() <= 1e-12 * std::max(hi, 1e-300);
  const double ridge = ill ? kFisherRidge : 0.0;
  const Vector shifted = (vals.array() + ridge).inverse().matrix();
  return eig.eigenvectors() *
         (shifted.asDiagonal() * (eig.eigenvectors().transpose() * grad));
}

/// Moves mu downhill along the (optionally natural) search gradient.
inline Isotropic canonical_step(const Isotropic &dist, const WalkerBatch &batch,
                                const NesConfig &config) {
  const auto rates = config.resolved_rates(static_cast<std::size_t>(dist.mu.size()));
  Vector grad = canonical_gradient_estimate(batch, dist.sigma);
  if (config.canonical_update == CanonicalUpdate::Natural) {
    grad = apply_inverse_fisher(estimate_fisher(batch.samples, dist.sigma), grad);
  }
  return {dist.mu - rates.eta_mu * grad, dist.sigma};
}

// ---------------------------------------------------------------------------
// sNES / xNES

inline Separable snes_step(const Separable &dist, const WalkerBatch &batch,
                           const NesConfig &config) {
  const auto k = batch.size();
  if (k < 2) {
    throw InvalidPopulationError("sNES needs at least 2 walkers");
  }
  detail::require_finite_fitness(batch);
  const auto d = dist.mu.size();
  const auto rates = config.resolved_rates(static_cast<std::size_t>(d));
  const Vector u = walker_utilities(batch.fitness);

  Vector grad_mu = Vector::Zero(d);
  Vector grad_sigma = Vector::Zero(d);
  for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(k); ++n) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double s = batch.samples(i, n);
      grad_mu[i] += u[n] * s;
      grad_sigma[i] += u[n] * (s * s - 1.0);
    }
  }
  Separable next = dist;
  for (Eigen::Index i = 0; i < d; ++i) {
    next.mu[i] = dist.mu[i] + rates.eta_mu * (dist.sigma[i] * grad_mu[i]);
    next.sigma[i] = dist.sigma[i] * std::exp(rates.eta_sigma / 2.0 * grad_sigma[i]);
  }
  return next;
}

inline Full xnes_step(const Full &dist, const WalkerBatch &batch,
                      const NesConfig &config) {
  const auto k = batch.size();
  if (k < 2) {
    throw InvalidPopulationError("xNES needs at least 2 walkers");
  }
  detail::require_finite_fitness(batch);
  const auto d = dist.mu.size();
  const auto rates = config.resolved_rates(static_cast<std::size_t>(d));
  const Vector u = walker_utilities(batch.fitness);

  Vector grad_mu = Vector::Zero(d);
  DenseMatrix grad_m = DenseMatrix::Zero(d, d);
  for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(k); ++n) {
    for (Eigen::Index i = 0; i < d; ++i) {
      grad_mu[i] += u[n] * batch.samples(i, n);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double outer = batch.samples(i, n) * batch.samples(j, n);
        grad_m(i, j) += u[n] * (outer - (i == j ? 1.0 : 0.0));
      }
    }
  }
  const double grad_sigma = grad_m.trace() / static_cast<double>(d);
  DenseMatrix grad_b = grad_m;
  grad_b.diagonal().array() -= grad_sigma;

  Full next = dist;
  next.mu = dist.mu + rates.eta_mu * (dist.sigma * (dist.shape * grad_mu));
  next.sigma = dist.sigma * std::exp(rates.eta_s / 2.0 * grad_sigma);
  next.shape = dist.shape * matrix_exponential_symmetric(rates.eta_B / 2.0 * grad_b);
  return next;
}

/// Dispatches to the update matching the distribution variant.
inline SearchDistribution nes_step(const SearchDistribution &dist,
                                   const WalkerBatch &batch,
                                   const NesConfig &config) {
  struct Visitor {
    const WalkerBatch &batch;
    const NesConfig &config;
    SearchDistribution operator()(const Isotropic &d) const {
      return canonical_step(d, batch, config);
    }
    SearchDistribution operator()(const Separable &d) const {
      return snes_step(d, batch, config);
    }
    SearchDistribution operator()(const Full &d) const {
      return xnes_step(d, batch, config);
    }
  };
  return std::visit(Visitor{batch, config}, dist);
}

// ---------------------------------------------------------------------------
// Outer loop

struct OptimizeResult {
  Vector best; // distribution center at exit
  SearchDistribution final_distribution;
  RunTrace trace;
};

/**
 * Minimizes `fitness` (callable as double(std::span<const double>)) by
 * repeated sample / evaluate / update steps until spread() drops below
 * config.stop_threshold or config.max_iterations updates have run.
 *
 * Walker n draws from stream (seed, n) throughout, so the trace is
 * bit-identical for any config.threads. Each update costs exactly k
 * evaluations; the per-iteration loss at the center is reported but not
 * counted. Records stream to `sink` as they are produced, so a caller keeps
 * the partial trace if an evaluation throws.
 */
template <class Fitness>
OptimizeResult optimize(Fitness &&fitness, SearchDistribution initial,
                        const NesConfig &config, std::uint64_t seed,
                        const TraceSink &sink = {}) {
  const auto d = static_cast<std::size_t>(mean(initial).size());
  if (d == 0) {
    throw InvalidDimensionError("empty search space");
  }
  const std::size_t k = config.population;
  if (k < 1 || (k < 2 && !std::holds_alternative<Isotropic>(initial))) {
    throw InvalidPopulationError("population too small for this variant");
  }
  auto loss_at = [&](const SearchDistribution &dist) {
    const Vector &mu = mean(dist);
    const double f = fitness(std::span<const double>(mu.data(), d));
    if (!std::isfinite(f)) {
      throw EvaluationError("non-finite fitness at distribution center");
    }
    return f;
  };

  OptimizeResult result{mean(initial), initial, RunTrace{seed, {}, {}}};
  SearchDistribution &dist = result.final_distribution;
  auto streams = walker_streams(seed, k);
  std::size_t evaluations = 0;
  detail::emit(result.trace, sink, {0, 0, loss_at(dist), spread(dist), 0, 0});

  for (std::size_t t = 1; t <= config.max_iterations; ++t) {
    if (spread(dist) < config.stop_threshold) {
      break;
    }
    WalkerBatch batch = sample_walkers(dist, streams);
    evaluate_walkers(batch, fitness, config.threads);
    dist = nes_step(dist, batch, config);
    evaluations += k;
    detail::emit(result.trace, sink,
                 {t, evaluations, loss_at(dist), spread(dist), 0, t});
  }
  result.best = mean(dist);
  return result;
}

} // namespace nesqc
