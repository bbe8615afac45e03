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
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nesqc/circuit.hpp"
#include "nesqc/errors.hpp"
#include "nesqc/nes.hpp"
#include "nesqc/rng.hpp"
#include "nesqc/trace.hpp"

namespace nesqc {

enum class PartitionKind { Random, LayerWise, QubitWise, LayerBlock, QubitBlock };

inline PartitionKind parse_partition_kind(std::string_view name) {
  if (name == "random") return PartitionKind::Random;
  if (name == "layer_wise") return PartitionKind::LayerWise;
  if (name == "qubit_wise") return PartitionKind::QubitWise;
  if (name == "layer_block") return PartitionKind::LayerBlock;
  if (name == "qubit_block") return PartitionKind::QubitBlock;
  throw InvalidBatchError("unknown partition strategy '" + std::string(name) + "'");
}

struct PartitionStrategy {
  PartitionKind kind = PartitionKind::Random;
  std::size_t batch_size = 50; // unused by LayerWise / QubitWise
};

/// Disjoint, exhaustive batches of slot indices, each sorted ascending.
struct BatchSchedule {
  std::vector<std::vector<std::size_t>> batches;
  std::size_t cursor = 0;

  [[nodiscard]] std::size_t size() const noexcept { return batches.size(); }
};

namespace detail {

/// Slots grouped by layer or by qubit.
inline std::vector<std::vector<std::size_t>>
slot_units(const CircuitTemplate &circuit, bool by_layer) {
  const std::size_t count = by_layer ? circuit.num_layers : circuit.num_qubits;
  std::vector<std::vector<std::size_t>> units(count);
  for (std::size_t s = 0; s < circuit.slots.size(); ++s) {
    const auto &info = circuit.slots[s];
    const std::size_t unit = by_layer ? info.layer : info.qubit;
    if (unit >= count) {
      throw InvalidSpecError("slot metadata out of range");
    }
    units[unit].push_back(s);
  }
  std::erase_if(units, [](const auto &u) { return u.empty(); });
  return units;
}

/// Merges consecutive units until the group is as close to `target` as it gets.
inline std::vector<std::vector<std::size_t>>
group_units(const std::vector<std::vector<std::size_t>> &units, std::size_t target) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> current;
  for (const auto &unit : units) {
    if (!current.empty()) {
      const auto now = static_cast<double>(current.size());
      const auto with = static_cast<double>(current.size() + unit.size());
      const auto t = static_cast<double>(target);
      if (std::abs(with - t) > std::abs(now - t)) {
        groups.push_back(std::move(current));
        current.clear();
      }
    }
    current.insert(current.end(), unit.begin(), unit.end());
  }
  if (!current.empty()) {
    groups.push_back(std::move(current));
  }
  return groups;
}

} // namespace detail

/**
 * Splits the circuit's parameter slots into batches.
 *
 *  - Random: shuffle all slots with `rng`, chunk by batch_size.
 *  - LayerWise / QubitWise: one batch per layer / per qubit.
 *  - LayerBlock / QubitBlock: consecutive layers / qubits merged until the
 *    group size is closest to batch_size.
 */
inline BatchSchedule make_partition(const CircuitTemplate &circuit,
                                    const PartitionStrategy &strategy,
                                    SeededRng &rng) {
  const std::size_t n = circuit.num_params();
  if (n == 0) {
    throw InvalidBatchError("circuit has no parameters to partition");
  }
  const bool sized = strategy.kind == PartitionKind::Random ||
                     strategy.kind == PartitionKind::LayerBlock ||
                     strategy.kind == PartitionKind::QubitBlock;
  if (sized && (strategy.batch_size < 1 || strategy.batch_size > n)) {
    throw InvalidBatchError("batch size must be in [1, " + std::to_string(n) + "]");
  }
  BatchSchedule schedule;
  switch (strategy.kind) {
  case PartitionKind::Random: {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    shuffle(all, rng);
    for (std::size_t start = 0; start < n; start += strategy.batch_size) {
      const std::size_t stop = std::min(n, start + strategy.batch_size);
      schedule.batches.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(start),
                                    all.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    break;
  }
  case PartitionKind::LayerWise:
    schedule.batches = detail::slot_units(circuit, true);
    break;
  case PartitionKind::QubitWise:
    schedule.batches = detail::slot_units(circuit, false);
    break;
  case PartitionKind::LayerBlock:
    schedule.batches =
        detail::group_units(detail::slot_units(circuit, true), strategy.batch_size);
    break;
  case PartitionKind::QubitBlock:
    schedule.batches =
        detail::group_units(detail::slot_units(circuit, false), strategy.batch_size);
    break;
  }
  for (auto &b : schedule.batches) {
    std::sort(b.begin(), b.end());
  }
  return schedule;
}

/// True if the batches cover [0, num_params) exactly once.
inline bool is_disjoint_exhaustive(const BatchSchedule &schedule,
                                   std::size_t num_params) {
  std::vector<int> seen(num_params, 0);
  for (const auto &b : schedule.batches) {
    if (b.empty()) {
      return false;
    }
    for (std::size_t s : b) {
      if (s >= num_params || seen[s]++ != 0) {
        return false;
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

enum class NesVariant { Separable, Full };
enum class BatchOrder { RoundRobin, Random };

struct BatchConfig {
  NesVariant variant = NesVariant::Separable;
  NesConfig nes;             // rates resolve with d = batch dimension
  double initial_sigma = 0.1;
  BatchOrder order = BatchOrder::RoundRobin;
};

struct BatchOptimizeResult {
  Vector best;
  RunTrace trace;
  std::vector<SearchDistribution> batch_distributions;
};

namespace detail {
inline constexpr std::uint64_t kBatchOrderStream = 0x4f52'4445'5200ULL;
}

/**
 * Optimizes one batch per iteration with all other coordinates frozen at the
 * current center. Each batch keeps its own spread (sigma vector, or sigma
 * and B restricted to the batch) across visits. Stops when every batch's
 * spread is below the threshold or after nes.max_iterations updates.
 *
 * With a single batch the trace equals optimize() for the same seed.
 */
template <class Fitness>
BatchOptimizeResult batch_optimize(Fitness &&fitness, const Vector &initial_mu,
                                   BatchSchedule schedule, const BatchConfig &config,
                                   std::uint64_t seed, const TraceSink &sink = {}) {
  const auto dim = static_cast<std::size_t>(initial_mu.size());
  if (!is_disjoint_exhaustive(schedule, dim)) {
    throw InvalidBatchError("schedule is not a partition of the parameters");
  }
  const std::size_t k = config.nes.population;
  if (k < 2) {
    throw InvalidPopulationError("batch optimization needs at least 2 walkers");
  }
  if (!(config.initial_sigma > 0.0)) {
    throw InvalidScaleError("initial sigma must be positive");
  }
  const std::size_t nb = schedule.size();

  BatchOptimizeResult result{initial_mu, RunTrace{seed, {}, {}}, {}};
  Vector &mu = result.best;
  auto &states = result.batch_distributions;
  for (const auto &b : schedule.batches) {
    const auto bd = static_cast<Eigen::Index>(b.size());
    Vector sub_mu(bd);
    for (Eigen::Index i = 0; i < bd; ++i) {
      sub_mu[i] = mu[static_cast<Eigen::Index>(b[static_cast<std::size_t>(i)])];
    }
    if (config.variant == NesVariant::Separable) {
      states.emplace_back(
          Separable{std::move(sub_mu), Vector::Constant(bd, config.initial_sigma)});
    } else {
      states.emplace_back(
          Full{std::move(sub_mu), config.initial_sigma, DenseMatrix::Identity(bd, bd)});
    }
  }

  auto max_spread = [&] {
    double s = 0.0;
    for (const auto &st : states) {
      s = std::max(s, spread(st));
    }
    return s;
  };
  auto loss_at_center = [&] {
    const double f = fitness(std::span<const double>(mu.data(), dim));
    if (!std::isfinite(f)) {
      throw EvaluationError("non-finite fitness at distribution center");
    }
    return f;
  };

  auto streams = walker_streams(seed, k);
  SeededRng order_rng(seed, detail::kBatchOrderStream);
  std::size_t evaluations = 0;
  detail::emit(result.trace, sink,
               {0, 0, loss_at_center(), max_spread(), schedule.cursor, 0});

  for (std::size_t t = 1; t <= config.nes.max_iterations; ++t) {
    if (max_spread() < config.nes.stop_threshold) {
      break;
    }
    const std::size_t b = config.order == BatchOrder::RoundRobin
                              ? schedule.cursor
                              : static_cast<std::size_t>(order_rng.uniform_index(nb));
    const auto &idx = schedule.batches[b];
    auto &sub = states[b];
    std::visit(
        [&](auto &d) {
          for (std::size_t i = 0; i < idx.size(); ++i) {
            d.mu[static_cast<Eigen::Index>(i)] = mu[static_cast<Eigen::Index>(idx[i])];
          }
        },
        sub);

    WalkerBatch batch = sample_walkers(sub, streams);
    DenseMatrix full = mu.replicate(1, static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      full.row(static_cast<Eigen::Index>(idx[i])) =
          batch.points.row(static_cast<Eigen::Index>(i));
    }
    parallel_for(k, config.nes.threads, [&](std::size_t n) {
      const double *col = full.col(static_cast<Eigen::Index>(n)).data();
      batch.fitness[static_cast<Eigen::Index>(n)] =
          fitness(std::span<const double>(col, dim));
    });

    sub = nes_step(sub, batch, config.nes);
    const Vector &sub_mu = mean(sub);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      mu[static_cast<Eigen::Index>(idx[i])] = sub_mu[static_cast<Eigen::Index>(i)];
    }
    evaluations += k;
    schedule.cursor = (b + 1) % nb;
    detail::emit(result.trace, sink,
                 {t, evaluations, loss_at_center(), max_spread(), b, t / nb});
  }
  return result;
}

} // namespace nesqc
