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
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "nesqc/circuit.hpp"
#include "nesqc/errors.hpp"
#include "nesqc/linalg.hpp"
#include "nesqc/nes.hpp"
#include "nesqc/parallel.hpp"
#include "nesqc/rng.hpp"
#include "nesqc/simulator.hpp"
#include "nesqc/trace.hpp"

namespace nesqc {

// ---------------------------------------------------------------------------
// Parameter shift

/// [E(theta_j + pi/2) - E(theta_j - pi/2)] / 2; two calls to `expval`.
template <class Expval>
double parameter_shift_component(Expval &&expval, std::span<const double> params,
                                 std::size_t j) {
  std::vector<double> shifted(params.begin(), params.end());
  shifted[j] = params[j] + std::numbers::pi / 2;
  const double plus = expval(std::span<const double>(shifted));
  shifted[j] = params[j] - std::numbers::pi / 2;
  const double minus = expval(std::span<const double>(shifted));
  return 0.5 * (plus - minus);
}

/// Full gradient by parameter shift; exactly 2 * params.size() calls.
template <class Expval>
std::vector<double> parameter_shift_gradient(Expval &&expval,
                                             std::span<const double> params) {
  std::vector<double> grad(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    grad[j] = parameter_shift_component(expval, params, j);
  }
  return grad;
}

/// d<O>/d(theta) for a circuit whose parameterized gates are Pauli rotations.
inline std::vector<double>
parameter_shift_expectation_gradient(const CircuitTemplate &circuit,
                                     std::span<const double> params,
                                     const Observable &observable) {
  if (params.size() != circuit.num_params()) {
    throw ArityError("parameter count does not match circuit");
  }
  return parameter_shift_gradient(
      [&](std::span<const double> p) {
        return expectation(run_circuit(circuit, p), observable);
      },
      params);
}

/// Gradient of (1 - E)^2 with E the vacuum-projector expectation.
inline std::vector<double> stateprep_loss_gradient(const CircuitTemplate &circuit,
                                                   std::span<const double> params) {
  const double e = vacuum_projector_expectation(run_circuit(circuit, params));
  auto grad = parameter_shift_expectation_gradient(circuit, params, VacuumProjector{});
  for (auto &g : grad) {
    g *= -2.0 * (1.0 - e);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Circuit losses

enum class LossKind {
  StatePrep, // (1 - <O>)^2
  Energy,    // <O>
};

/// A circuit, an observable and how the loss is built from its expectation.
struct CircuitLoss {
  CircuitTemplate circuit;
  Observable observable = VacuumProjector{};
  LossKind kind = LossKind::StatePrep;

  [[nodiscard]] double expectation_at(std::span<const double> params) const {
    return expectation(run_circuit(circuit, params), observable);
  }

  double operator()(std::span<const double> params) const {
    const double e = expectation_at(params);
    return kind == LossKind::StatePrep ? (1.0 - e) * (1.0 - e) : e;
  }

  /// 2 * num_params + 1 circuit evaluations.
  [[nodiscard]] std::vector<double> gradient(std::span<const double> params) const {
    auto grad = parameter_shift_gradient(
        [this](std::span<const double> p) { return expectation_at(p); }, params);
    if (kind == LossKind::StatePrep) {
      const double scale = -2.0 * (1.0 - expectation_at(params));
      for (auto &g : grad) {
        g *= scale;
      }
    }
    return grad;
  }
};

// ---------------------------------------------------------------------------
// Gradient descent

struct GdConfig {
  double learning_rate = 0.0; // required, must be > 0
  std::size_t max_iterations = 500;
  double tolerance = 1e-8; // stop when ||grad|| < tolerance
};

struct GdResult {
  Vector params;
  RunTrace trace;
};

/**
 * theta <- theta - eta * grad f(theta). Each iteration is charged
 * 2 * dim + 1 evaluations, the parameter-shift cost of one gradient plus the
 * loss. spread_max records the gradient norm that was tested for stopping.
 */
template <class Loss, class Gradient>
GdResult gradient_descent(Loss &&loss, Gradient &&gradient, Vector initial,
                          const GdConfig &config, std::uint64_t seed = 0,
                          const TraceSink &sink = {}) {
  if (!(config.learning_rate > 0.0)) {
    throw InvalidScaleError("gradient descent learning rate must be positive");
  }
  const auto dim = static_cast<std::size_t>(initial.size());
  const std::size_t per_iteration = 2 * dim + 1;
  GdResult result{std::move(initial), RunTrace{seed, {}, {}}};
  Vector &theta = result.params;

  auto checked_loss = [&] {
    const double f = loss(std::span<const double>(theta.data(), dim));
    if (!std::isfinite(f)) {
      throw DivergenceError("gradient descent loss became non-finite");
    }
    return f;
  };
  auto grad_at = [&] {
    const auto g = gradient(std::span<const double>(theta.data(), dim));
    Vector out(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      out[static_cast<Eigen::Index>(i)] = g[i];
    }
    if (!out.allFinite()) {
      throw DivergenceError("gradient descent gradient became non-finite");
    }
    return out;
  };

  std::size_t evaluations = 0;
  Vector grad = grad_at();
  detail::emit(result.trace, sink, {0, 0, checked_loss(), grad.norm(), 0, 0});
  for (std::size_t t = 1; t <= config.max_iterations; ++t) {
    if (grad.norm() < config.tolerance) {
      break;
    }
    theta -= config.learning_rate * grad;
    evaluations += per_iteration;
    grad = grad_at();
    detail::emit(result.trace, sink, {t, evaluations, checked_loss(), grad.norm(), 0, t});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Variance of the surrogate search gradient

struct VarianceScanConfig {
  CircuitTemplate circuit;
  Observable observable = VacuumProjector{};
  std::size_t num_inits = 500;
  std::vector<double> sigma_inits;
  std::vector<std::size_t> walker_counts;
  /// Antithetic (f(mu + sigma s) - f(mu - sigma s)) / 2 form instead of
  /// the single-sided estimator.
  bool symmetric = false;
  std::size_t threads = 1;
};

struct VarianceRow {
  double sigma_init = 0.0;
  std::size_t k = 0;
  double variance_surrogate = 0.0;
  double variance_exact = 0.0;
};

namespace detail {

inline double sample_variance(const std::vector<double> &xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) {
    mean += x;
  }
  mean /= n;
  double ss = 0.0;
  for (double x : xs) {
    ss += (x - mean) * (x - mean);
  }
  return ss / (n - 1.0);
}

inline std::vector<double> uniform_angles(SeededRng &rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto &x : out) {
    x = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return out;
}

} // namespace detail

/**
 * For num_inits parameter vectors drawn uniformly from [0, 2pi) (init i uses
 * stream (seed, i)), computes the first component of the canonical search
 * gradient (1 / (k sigma)) sum_n f(theta + sigma s_n) s_n[0] with f the
 * observable's expectation, and the first component of the analytical
 * gradient. Returns one row per (sigma_init, k) with the variances of both
 * across initializations.
 */
inline std::vector<VarianceRow>
surrogate_gradient_variance_scan(const VarianceScanConfig &config, std::uint64_t seed) {
  if (config.num_inits < 2) {
    throw InvalidSpecError("variance scan needs at least 2 initializations");
  }
  if (config.circuit.num_params() == 0) {
    throw InvalidSpecError("variance scan needs a parameterized circuit");
  }
  for (double s : config.sigma_inits) {
    if (!(s > 0.0)) {
      throw InvalidScaleError("sigma_init must be positive");
    }
  }
  for (std::size_t k : config.walker_counts) {
    if (k < 1) {
      throw InvalidPopulationError("walker count must be at least 1");
    }
  }
  const std::size_t d = config.circuit.num_params();
  const std::size_t cells = config.sigma_inits.size() * config.walker_counts.size();
  std::vector<double> exact(config.num_inits);
  std::vector<std::vector<double>> surrogate(cells,
                                             std::vector<double>(config.num_inits));
  auto expval = [&](std::span<const double> p) {
    return expectation(run_circuit(config.circuit, p), config.observable);
  };

  parallel_for(config.num_inits, config.threads, [&](std::size_t i) {
    SeededRng rng(seed, i);
    const auto theta = detail::uniform_angles(rng, d);
    exact[i] = parameter_shift_component(expval, theta, 0);
    std::vector<double> z(d);
    std::size_t cell = 0;
    for (double sigma : config.sigma_inits) {
      for (std::size_t k : config.walker_counts) {
        double acc = 0.0;
        for (std::size_t n = 0; n < k; ++n) {
          const Vector s = sample_standard_normal_vector(rng, d);
          for (std::size_t j = 0; j < d; ++j) {
            z[j] = theta[j] + sigma * s[static_cast<Eigen::Index>(j)];
          }
          double f = expval(z);
          if (config.symmetric) {
            for (std::size_t j = 0; j < d; ++j) {
              z[j] = theta[j] - sigma * s[static_cast<Eigen::Index>(j)];
            }
            f = 0.5 * (f - expval(z));
          }
          acc += f * s[0];
        }
        surrogate[cell++][i] = acc / (static_cast<double>(k) * sigma);
      }
    }
  });

  const double var_exact = detail::sample_variance(exact);
  std::vector<VarianceRow> rows;
  std::size_t cell = 0;
  for (double sigma : config.sigma_inits) {
    for (std::size_t k : config.walker_counts) {
      rows.push_back({sigma, k, detail::sample_variance(surrogate[cell++]), var_exact});
    }
  }
  return rows;
}

/// Variance of d<O>/d(theta_slot) over uniform random initializations.
inline double analytical_gradient_variance(const CircuitTemplate &circuit,
                                           const Observable &observable,
                                           std::size_t num_inits, std::uint64_t seed,
                                           std::size_t slot = 0,
                                           std::size_t threads = 1) {
  if (num_inits < 2) {
    throw InvalidSpecError("variance needs at least 2 initializations");
  }
  if (slot >= circuit.num_params()) {
    throw IndexError("slot out of range");
  }
  std::vector<double> grads(num_inits);
  auto expval = [&](std::span<const double> p) {
    return expectation(run_circuit(circuit, p), observable);
  };
  parallel_for(num_inits, threads, [&](std::size_t i) {
    SeededRng rng(seed, i);
    const auto theta = detail::uniform_angles(rng, circuit.num_params());
    grads[i] = parameter_shift_component(expval, theta, slot);
  });
  return detail::sample_variance(grads);
}

// ---------------------------------------------------------------------------
// Hybrid sNES warm-up then gradient descent

struct HybridConfig {
  std::size_t warmup_iterations = 5;
  /// Extra snapshots every n sNES iterations; 0 records only the start and
  /// the end of the warm-up.
  std::size_t snapshot_interval = 0;
  NesConfig nes;
  double initial_sigma = 0.1;
  GdConfig gd;
};

struct HybridResult {
  Vector params;
  RunTrace trace; // snapshots filled
};

/**
 * Runs sNES for warmup_iterations from N(initial, initial_sigma^2 I), then
 * gradient descent from the sNES center. Gradient snapshots are taken at
 * iteration 0 and at the end of the warm-up; they are diagnostics and are
 * not charged to the evaluation count. The gradient-descent phase continues
 * the iteration and evaluation counters of the warm-up.
 */
inline HybridResult hybrid_optimize(const CircuitLoss &loss, Vector initial,
                                    const HybridConfig &config, std::uint64_t seed,
                                    const TraceSink &sink = {}) {
  const auto dim = static_cast<std::size_t>(initial.size());
  if (dim != loss.circuit.num_params()) {
    throw ArityError("initial parameters do not match circuit");
  }
  HybridResult result{initial, RunTrace{seed, {}, {}}};
  auto snapshot = [&](std::size_t iteration, const Vector &at) {
    result.trace.snapshots.push_back(
        {iteration, loss.gradient(std::span<const double>(at.data(), dim))});
  };
  auto checked = [&](const Vector &at) {
    const double f = loss(std::span<const double>(at.data(), dim));
    if (!std::isfinite(f)) {
      throw EvaluationError("non-finite loss");
    }
    return f;
  };

  if (config.warmup_iterations == 0) {
    snapshot(0, initial);
    auto gd = gradient_descent(
        loss, [&](std::span<const double> p) { return loss.gradient(p); },
        std::move(initial), config.gd, seed, sink);
    result.trace.records = std::move(gd.trace.records);
    result.params = std::move(gd.params);
    return result;
  }

  Separable dist{std::move(initial), Vector::Constant(static_cast<Eigen::Index>(dim),
                                                      config.initial_sigma)};
  auto streams = walker_streams(seed, config.nes.population);
  std::size_t evaluations = 0;
  snapshot(0, dist.mu);
  detail::emit(result.trace, sink, {0, 0, checked(dist.mu), dist.sigma.maxCoeff(), 0, 0});
  std::size_t t = 0;
  while (t < config.warmup_iterations) {
    ++t;
    WalkerBatch batch = sample_walkers(SearchDistribution{dist}, streams);
    evaluate_walkers(batch, loss, config.nes.threads);
    dist = snes_step(dist, batch, config.nes);
    evaluations += config.nes.population;
    detail::emit(result.trace, sink,
                 {t, evaluations, checked(dist.mu), dist.sigma.maxCoeff(), 0, t});
    if (config.snapshot_interval > 0 && t % config.snapshot_interval == 0 &&
        t != config.warmup_iterations) {
      snapshot(t, dist.mu);
    }
  }
  snapshot(t, dist.mu);

  const std::size_t offset_iter = t;
  const std::size_t offset_evals = evaluations;
  TraceSink shifted;
  if (sink) {
    shifted = [&](const TraceRecord &r) {
      if (r.iteration == 0) {
        return;
      }
      TraceRecord s = r;
      s.iteration += offset_iter;
      s.evaluations += offset_evals;
      s.sweep = s.iteration;
      sink(s);
    };
  }
  auto gd = gradient_descent(
      loss, [&](std::span<const double> p) { return loss.gradient(p); }, dist.mu,
      config.gd, seed, shifted);
  for (const auto &r : gd.trace.records) {
    if (r.iteration == 0) {
      continue;
    }
    TraceRecord s = r;
    s.iteration += offset_iter;
    s.evaluations += offset_evals;
    s.sweep = s.iteration;
    result.trace.records.push_back(s);
  }
  result.params = std::move(gd.params);
  return result;
}

} // namespace nesqc
