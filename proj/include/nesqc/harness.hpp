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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nesqc/ansatz.hpp"
#include "nesqc/batching.hpp"
#include "nesqc/errors.hpp"
#include "nesqc/gradients.hpp"
#include "nesqc/hamiltonian.hpp"
#include "nesqc/nes.hpp"
#include "nesqc/parallel.hpp"
#include "nesqc/rng.hpp"
#include "nesqc/simulator.hpp"
#include "nesqc/trace.hpp"

#ifndef NESQC_VERSION
#define NESQC_VERSION "0.1.0"
#endif

namespace nesqc {

inline constexpr std::string_view kVersion = NESQC_VERSION;

inline constexpr std::string_view kTraceColumns =
    "iteration,evaluations,loss,spread_max,batch_cursor";
inline constexpr std::string_view kSummaryColumns =
    "iteration,evaluations,loss_mean,loss_min,loss_max";
inline constexpr std::string_view kVarianceColumns =
    "sigma_init,k,variance_surrogate,variance_exact";
inline constexpr std::string_view kSnapshotColumns = "iteration,param_index,gradient";
inline constexpr std::string_view kBarrenColumns = "qubits,variance_exact";

// Streams derived from a run seed. Walkers use ids [0, k).
inline constexpr std::uint64_t kInitStream = 0x494e'4954'0000ULL;
inline constexpr std::uint64_t kPartitionStream = 0x5041'5254'0000ULL;

// ---------------------------------------------------------------------------
// Configuration

enum class ExperimentKind { StatePrep, Vqe, VarianceScan, Batch, Hybrid, CompareGd };
enum class OptimizerKind { Canonical, Snes, Xnes, Gd, Hybrid };

inline std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
  case OptimizerKind::Canonical:
    return "canonical";
  case OptimizerKind::Snes:
    return "snes";
  case OptimizerKind::Xnes:
    return "xnes";
  case OptimizerKind::Gd:
    return "gd";
  case OptimizerKind::Hybrid:
    return "hybrid";
  }
  return "?";
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::StatePrep;
  AnsatzSpec ansatz{AnsatzFamily::RPQC, 5, 10, 1};
  OptimizerKind optimizer = OptimizerKind::Snes;

  std::size_t walkers = 16;
  double init_sigma = 0.1;
  std::size_t max_iterations = 500;
  double stop_threshold = 1e-8;
  std::optional<LearningRates> rates;
  CanonicalUpdate canonical_update = CanonicalUpdate::Plain;

  double gd_learning_rate = 0.0;
  double gd_tolerance = 1e-8;
  std::size_t gd_max_iterations = 500;

  PartitionStrategy partition;
  BatchOrder batch_order = BatchOrder::RoundRobin;

  std::size_t warmup_iterations = 5;
  std::size_t snapshot_interval = 0;

  std::size_t scan_inits = 500;
  std::vector<double> scan_sigmas{std::numbers::pi / 8, std::numbers::pi / 16,
                                  std::numbers::pi / 32};
  std::vector<std::size_t> scan_walkers{1, 2, 3, 4, 5, 6, 7, 8};
  std::string scan_observable = "Z0 Z1";
  std::vector<std::size_t> scan_qubit_grid;
  bool scan_symmetric = false;

  std::vector<std::uint64_t> seeds{1};
  std::string output = "out";
  std::string hamiltonian;

  std::size_t seed_threads = 0; // 0 = hardware concurrency
  std::size_t walker_threads = 1;

  /// Configuration echoed into every output header. Excludes `output` and
  /// `threads`, which do not affect results.
  nlohmann::json source;
};

namespace detail {

template <class T>
T get_or(const nlohmann::json &obj, const char *key, T fallback) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
    return fallback;
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline const nlohmann::json &section(const nlohmann::json &root, const char *key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!root.contains(key)) {
    return empty;
  }
  if (!root.at(key).is_object()) {
    throw ConfigError(std::string("section '") + key + "' must be an object");
  }
  return root.at(key);
}

inline ExperimentKind parse_experiment(const std::string &s) {
  if (s == "stateprep") return ExperimentKind::StatePrep;
  if (s == "vqe") return ExperimentKind::Vqe;
  if (s == "variance_scan") return ExperimentKind::VarianceScan;
  if (s == "batch") return ExperimentKind::Batch;
  if (s == "hybrid") return ExperimentKind::Hybrid;
  if (s == "compare_gd") return ExperimentKind::CompareGd;
  throw ConfigError("unknown experiment '" + s + "'");
}

inline OptimizerKind parse_optimizer(const std::string &s) {
  if (s == "canonical") return OptimizerKind::Canonical;
  if (s == "snes") return OptimizerKind::Snes;
  if (s == "xnes") return OptimizerKind::Xnes;
  if (s == "gd") return OptimizerKind::Gd;
  if (s == "hybrid") return OptimizerKind::Hybrid;
  throw ConfigError("unknown optimizer '" + s + "'");
}

} // namespace detail

/**
 * Reads a configuration document. Recognized layout (all keys optional
 * except `experiment`):
 *
 *     {
 *       "experiment": "stateprep|vqe|variance_scan|batch|hybrid|compare_gd",
 *       "ansatz":    {"family": "rpqc", "qubits": 5, "layers": 10, "structure_seed": 1},
 *       "optimizer": {"kind": "snes", "walkers": 16, "init_sigma": 0.1,
 *                     "max_iterations": 500, "stop_threshold": 1e-8,
 *                     "rates": {"eta_mu": 1, "eta_s": .., "eta_B": .., "eta_sigma": ..},
 *                     "canonical_update": "plain|natural"},
 *       "gd":        {"learning_rate": 0.5, "tolerance": 1e-8, "max_iterations": 500},
 *       "batch":     {"strategy": "random", "size": 50, "order": "round_robin|random"},
 *       "hybrid":    {"warmup_iterations": 5, "snapshot_interval": 0},
 *       "variance_scan": {"num_inits": 500, "sigma_init": [..], "walkers": [..],
 *                         "observable": "Z0 Z1", "qubit_grid": [..], "symmetric": false},
 *       "seeds": [1, 2, 3],
 *       "threads": {"seeds": 0, "walkers": 1},
 *       "output": "out/stateprep",
 *       "hamiltonian": "data/h2_sto3g_jw.txt"
 *     }
 */
inline ExperimentConfig parse_experiment_config(const nlohmann::json &doc) {
  using detail::get_or;
  if (!doc.is_object()) {
    throw ConfigError("configuration must be a JSON object");
  }
  if (!doc.contains("experiment")) {
    throw ConfigError("configuration is missing 'experiment'");
  }
  ExperimentConfig c;
  c.experiment = detail::parse_experiment(get_or<std::string>(doc, "experiment", ""));

  const auto &ans = detail::section(doc, "ansatz");
  try {
    c.ansatz.family = parse_ansatz_family(get_or<std::string>(ans, "family", "rpqc"));
  } catch (const InvalidSpecError &e) {
    throw ConfigError(e.what());
  }
  c.ansatz.num_qubits = get_or<std::size_t>(ans, "qubits", c.ansatz.num_qubits);
  c.ansatz.num_layers = get_or<std::size_t>(ans, "layers", c.ansatz.num_layers);
  c.ansatz.structure_seed = get_or<std::uint64_t>(ans, "structure_seed", 1);

  const auto &opt = detail::section(doc, "optimizer");
  c.optimizer = detail::parse_optimizer(get_or<std::string>(opt, "kind", "snes"));
  c.walkers = get_or<std::size_t>(opt, "walkers", c.walkers);
  c.init_sigma = get_or<double>(opt, "init_sigma", c.init_sigma);
  c.max_iterations = get_or<std::size_t>(opt, "max_iterations", c.max_iterations);
  c.stop_threshold = get_or<double>(opt, "stop_threshold", c.stop_threshold);
  if (opt.contains("rates") && !opt.at("rates").is_null()) {
    const auto &r = opt.at("rates");
    for (const char *key : {"eta_mu", "eta_s", "eta_B", "eta_sigma"}) {
      if (!r.is_object() || !r.contains(key)) {
        throw ConfigError(std::string("optimizer.rates must set ") + key);
      }
    }
    c.rates = LearningRates{get_or<double>(r, "eta_mu", 1.0), get_or<double>(r, "eta_s", 1.0),
                            get_or<double>(r, "eta_B", 1.0),
                            get_or<double>(r, "eta_sigma", 1.0)};
  }
  const auto update = get_or<std::string>(opt, "canonical_update", "plain");
  if (update != "plain" && update != "natural") {
    throw ConfigError("canonical_update must be 'plain' or 'natural'");
  }
  c.canonical_update =
      update == "natural" ? CanonicalUpdate::Natural : CanonicalUpdate::Plain;

  const auto &gd = detail::section(doc, "gd");
  c.gd_learning_rate = get_or<double>(gd, "learning_rate", 0.0);
  c.gd_tolerance = get_or<double>(gd, "tolerance", c.gd_tolerance);
  c.gd_max_iterations = get_or<std::size_t>(gd, "max_iterations", c.max_iterations);

  const auto &batch = detail::section(doc, "batch");
  try {
    c.partition.kind = parse_partition_kind(get_or<std::string>(batch, "strategy", "random"));
  } catch (const InvalidBatchError &e) {
    throw ConfigError(e.what());
  }
  c.partition.batch_size = get_or<std::size_t>(batch, "size", c.partition.batch_size);
  const auto order = get_or<std::string>(batch, "order", "round_robin");
  if (order != "round_robin" && order != "random") {
    throw ConfigError("batch.order must be 'round_robin' or 'random'");
  }
  c.batch_order = order == "random" ? BatchOrder::Random : BatchOrder::RoundRobin;

  const auto &hyb = detail::section(doc, "hybrid");
  c.warmup_iterations = get_or<std::size_t>(hyb, "warmup_iterations", c.warmup_iterations);
  c.snapshot_interval = get_or<std::size_t>(hyb, "snapshot_interval", c.snapshot_interval);

  const auto &scan = detail::section(doc, "variance_scan");
  c.scan_inits = get_or<std::size_t>(scan, "num_inits", c.scan_inits);
  c.scan_sigmas = get_or<std::vector<double>>(scan, "sigma_init", c.scan_sigmas);
  c.scan_walkers = get_or<std::vector<std::size_t>>(scan, "walkers", c.scan_walkers);
  c.scan_observable = get_or<std::string>(scan, "observable", c.scan_observable);
  c.scan_qubit_grid = get_or<std::vector<std::size_t>>(scan, "qubit_grid", {});
  c.scan_symmetric = get_or<bool>(scan, "symmetric", false);

  c.seeds = get_or<std::vector<std::uint64_t>>(doc, "seeds", c.seeds);
  c.output = get_or<std::string>(doc, "output", c.output);
  c.hamiltonian = get_or<std::string>(doc, "hamiltonian", "");
  const auto &thr = detail::section(doc, "threads");
  c.seed_threads = get_or<std::size_t>(thr, "seeds", 0);
  c.walker_threads = get_or<std::size_t>(thr, "walkers", 1);

  if (c.seeds.empty()) {
    throw ConfigError("seeds must not be empty");
  }
  if (c.walkers < 1) {
    throw ConfigError("optimizer.walkers must be at least 1");
  }
  if ((c.optimizer == OptimizerKind::Snes || c.optimizer == OptimizerKind::Xnes ||
       c.optimizer == OptimizerKind::Hybrid || c.experiment == ExperimentKind::Batch) &&
      c.walkers < 2) {
    throw ConfigError("sNES/xNES need at least 2 walkers");
  }
  if (!(c.init_sigma > 0.0)) {
    throw ConfigError("optimizer.init_sigma must be positive");
  }
  const bool needs_gd = c.optimizer == OptimizerKind::Gd ||
                        c.optimizer == OptimizerKind::Hybrid ||
                        c.experiment == ExperimentKind::CompareGd ||
                        c.experiment == ExperimentKind::Hybrid;
  if (needs_gd && !(c.gd_learning_rate > 0.0)) {
    throw ConfigError("gd.learning_rate is required and must be positive");
  }
  if (c.experiment == ExperimentKind::Vqe && c.hamiltonian.empty()) {
    throw ConfigError("vqe experiments need a 'hamiltonian' file");
  }
  if (c.experiment == ExperimentKind::Batch && c.optimizer != OptimizerKind::Snes &&
      c.optimizer != OptimizerKind::Xnes) {
    throw ConfigError("batch experiments use optimizer 'snes' or 'xnes'");
  }
  if (c.experiment == ExperimentKind::VarianceScan && c.scan_inits < 2) {
    throw ConfigError("variance_scan.num_inits must be at least 2");
  }
  c.source = doc;
  c.source.erase("output");
  c.source.erase("threads");
  return c;
}

/**
 * Applies `path=value` to a JSON document; dotted paths descend into (and
 * create) objects. The value is parsed as JSON when possible, otherwise
 * taken as a string.
 */
inline void apply_override(nlohmann::json &doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value: '" +
                      std::string(assignment) + "'");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) {
    value = raw;
  }
  nlohmann::json *node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) {
      throw ConfigError("empty key in override '" + path + "'");
    }
    if (!node->is_object()) {
      throw ConfigError("override path '" + path + "' crosses a non-object");
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) {
      *node = nlohmann::json::object();
    }
    start = dot + 1;
  }
}

inline nlohmann::json load_config_document(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config '" + path + "'");
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) {
    throw ConfigError("config '" + path + "' is not valid JSON");
  }
  return doc;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trace_header(std::uint64_t seed, const nlohmann::json &config) {
  return "# nesqc-trace v1 version=" + std::string(kVersion) +
         " seed=" + std::to_string(seed) + " config=" + config.dump();
}

inline std::string format_trace_row(const TraceRecord &r) {
  return std::to_string(r.iteration) + ',' + std::to_string(r.evaluations) + ',' +
         format_double(r.loss) + ',' + format_double(r.spread_max) + ',' +
         std::to_string(r.batch_cursor);
}

/// Writes trace rows as they arrive so a failed run leaves a partial file.
class TraceCsvWriter {
 public:
  TraceCsvWriter(const std::filesystem::path &path, std::uint64_t seed,
                 const nlohmann::json &config)
      : out_(path) {
    if (!out_) {
      throw Error("cannot write '" + path.string() + "'");
    }
    out_ << trace_header(seed, config) << '\n' << kTraceColumns << '\n';
  }

  void write(const TraceRecord &r) { out_ << format_trace_row(r) << '\n'; }

  [[nodiscard]] TraceSink sink() {
    return [this](const TraceRecord &r) { write(r); };
  }

 private:
  std::ofstream out_;
};

inline void write_variance_csv(const std::filesystem::path &path, std::uint64_t seed,
                               const nlohmann::json &config,
                               const std::vector<VarianceRow> &rows) {
  std::ofstream out(path);
  out << "# nesqc-variance v1 version=" << kVersion << " seed=" << seed
      << " config=" << config.dump() << '\n'
      << kVarianceColumns << '\n';
  for (const auto &r : rows) {
    out << format_double(r.sigma_init) << ',' << r.k << ','
        << format_double(r.variance_surrogate) << ',' << format_double(r.variance_exact)
        << '\n';
  }
}

inline void write_snapshot_csv(const std::filesystem::path &path, std::uint64_t seed,
                               const nlohmann::json &config,
                               const std::vector<GradientSnapshot> &snapshots) {
  std::ofstream out(path);
  out << "# nesqc-gradients v1 version=" << kVersion << " seed=" << seed
      << " config=" << config.dump() << '\n'
      << kSnapshotColumns << '\n';
  for (const auto &snap : snapshots) {
    for (std::size_t j = 0; j < snap.components.size(); ++j) {
      out << snap.iteration << ',' << j << ',' << format_double(snap.components[j])
          << '\n';
    }
  }
}

/// Parses a trace CSV written by TraceCsvWriter.
inline std::vector<TraceRecord> read_trace_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw AlignmentError("cannot read trace '" + path.string() + "'");
  }
  std::vector<TraceRecord> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (!header) {
      if (line != kTraceColumns) {
        throw AlignmentError("'" + path.string() + "' is not a trace file");
      }
      header = true;
      continue;
    }
    TraceRecord r;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != 5) {
      throw AlignmentError("malformed row in '" + path.string() + "'");
    }
    try {
      r.iteration = std::stoull(cells[0]);
      r.evaluations = std::stoull(cells[1]);
      r.loss = std::stod(cells[2]);
      r.spread_max = std::stod(cells[3]);
      r.batch_cursor = std::stoull(cells[4]);
    } catch (const std::exception &) {
      throw AlignmentError("malformed row in '" + path.string() + "'");
    }
    rows.push_back(r);
  }
  if (!header) {
    throw AlignmentError("'" + path.string() + "' has no trace header");
  }
  return rows;
}

struct SummaryRow {
  std::size_t iteration = 0;
  std::size_t evaluations = 0;
  double loss_mean = 0.0;
  double loss_min = 0.0;
  double loss_max = 0.0;
};

/// Per-iteration mean/min/max of loss; all traces must share one grid.
inline std::vector<SummaryRow>
summarize(const std::vector<std::vector<TraceRecord>> &traces) {
  if (traces.empty()) {
    throw AlignmentError("nothing to summarize");
  }
  const auto &grid = traces.front();
  for (const auto &t : traces) {
    if (t.size() != grid.size()) {
      throw AlignmentError("traces have different lengths");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (t[i].iteration != grid[i].iteration || t[i].evaluations != grid[i].evaluations) {
        throw AlignmentError("traces do not share an iteration grid");
      }
    }
  }
  std::vector<SummaryRow> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SummaryRow row{grid[i].iteration, grid[i].evaluations, 0.0,
                   std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    for (const auto &t : traces) {
      row.loss_mean += t[i].loss;
      row.loss_min = std::min(row.loss_min, t[i].loss);
      row.loss_max = std::max(row.loss_max, t[i].loss);
    }
    row.loss_mean /= static_cast<double>(traces.size());
    out.push_back(row);
  }
  return out;
}

inline std::vector<SummaryRow>
summarize_files(const std::vector<std::filesystem::path> &paths) {
  std::vector<std::vector<TraceRecord>> traces;
  traces.reserve(paths.size());
  for (const auto &p : paths) {
    traces.push_back(read_trace_csv(p));
  }
  return summarize(traces);
}

inline void write_summary_csv(const std::filesystem::path &path,
                              const std::vector<SummaryRow> &rows, std::size_t runs) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << "# nesqc-summary v1 version=" << kVersion << " runs=" << runs << '\n'
      << kSummaryColumns << '\n';
  for (const auto &r : rows) {
    out << r.iteration << ',' << r.evaluations << ',' << format_double(r.loss_mean) << ','
        << format_double(r.loss_min) << ',' << format_double(r.loss_max) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiments

struct RunReport {
  std::vector<std::filesystem::path> files;
  std::optional<double> exact_ground_energy;
};

namespace detail {

inline Vector random_center(std::uint64_t seed, std::size_t dim) {
  SeededRng rng(seed, kInitStream);
  Vector mu(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    mu[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return mu;
}

inline NesConfig nes_config(const ExperimentConfig &c) {
  NesConfig n;
  n.population = c.walkers;
  n.rates = c.rates;
  n.max_iterations = c.max_iterations;
  n.stop_threshold = c.stop_threshold;
  n.threads = c.walker_threads;
  n.canonical_update = c.canonical_update;
  return n;
}

inline GdConfig gd_config(const ExperimentConfig &c) {
  return {c.gd_learning_rate, c.gd_max_iterations, c.gd_tolerance};
}

/// Runs one optimizer from the config's initialization and streams its trace.
inline RunTrace run_single(const ExperimentConfig &c, OptimizerKind kind,
                           const CircuitLoss &loss, std::uint64_t seed,
                           TraceCsvWriter &writer) {
  const std::size_t dim = loss.circuit.num_params();
  Vector mu = random_center(seed, dim);
  const auto d = static_cast<Eigen::Index>(dim);
  switch (kind) {
  case OptimizerKind::Canonical:
    return optimize(loss, Isotropic{mu, c.init_sigma}, nes_config(c), seed, writer.sink())
        .trace;
  case OptimizerKind::Snes:
    return optimize(loss, Separable{mu, Vector::Constant(d, c.init_sigma)}, nes_config(c),
                    seed, writer.sink())
        .trace;
  case OptimizerKind::Xnes:
    return optimize(loss, Full{mu, c.init_sigma, DenseMatrix::Identity(d, d)},
                    nes_config(c), seed, writer.sink())
        .trace;
  case OptimizerKind::Gd:
    return gradient_descent(
               loss, [&](std::span<const double> p) { return loss.gradient(p); }, mu,
               gd_config(c), seed, writer.sink())
        .trace;
  case OptimizerKind::Hybrid: {
    HybridConfig h{c.warmup_iterations, c.snapshot_interval, nes_config(c), c.init_sigma,
                   gd_config(c)};
    return hybrid_optimize(loss, mu, h, seed, writer.sink()).trace;
  }
  }
  throw ConfigError("unsupported optimizer");
}

inline std::filesystem::path resolve_input(const std::string &path,
                                           const std::filesystem::path &base) {
  std::filesystem::path p(path);
  if (p.is_absolute() || std::filesystem::exists(p) || base.empty()) {
    return p;
  }
  return base / p;
}

/// Summary over the iteration prefix every trace reached.
inline std::vector<SummaryRow> summarize_prefix(std::vector<std::vector<TraceRecord>> traces) {
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (const auto &t : traces) {
    shortest = std::min(shortest, t.size());
  }
  for (auto &t : traces) {
    t.resize(shortest);
  }
  return summarize(traces);
}

} // namespace detail

/**
 * Executes the configured experiment once per seed, writing into
 * config.output:
 *
 *  - trace_seed<N>.csv and summary.csv (stateprep, vqe, batch, hybrid)
 *  - trace_<opt>_seed<N>.csv and summary_<opt>.csv for both optimizers
 *    (compare_gd)
 *  - gradients_seed<N>.csv (hybrid)
 *  - variance_scan_seed<N>.csv, barren_plateau_seed<N>.csv (variance_scan)
 *  - circuit.txt, config.json, and reference.txt for vqe
 *
 * Seeds run concurrently. Relative input paths are tried against the
 * working directory first and then `config_dir`.
 */
inline RunReport run_experiment(const ExperimentConfig &c,
                                const std::filesystem::path &config_dir = {}) {
  namespace fs = std::filesystem;
  const fs::path out_dir(c.output);
  fs::create_directories(out_dir);
  RunReport report;
  std::mutex report_mutex;
  auto record_file = [&](fs::path p) {
    const std::lock_guard lock(report_mutex);
    report.files.push_back(std::move(p));
  };

  CircuitTemplate circuit;
  try {
    circuit = build_ansatz(c.ansatz);
  } catch (const InvalidSpecError &e) {
    throw ConfigError(e.what());
  }
  {
    std::ofstream(out_dir / "circuit.txt") << serialize(circuit);
    std::ofstream(out_dir / "config.json") << c.source.dump(2) << '\n';
  }

  CircuitLoss loss{circuit, VacuumProjector{}, LossKind::StatePrep};
  if (c.experiment == ExperimentKind::Vqe) {
    const fs::path hpath = detail::resolve_input(c.hamiltonian, config_dir);
    if (!fs::exists(hpath)) {
      throw ConfigError("Hamiltonian file '" + c.hamiltonian + "' not found");
    }
    PauliSum h;
    try {
      h = load_pauli_file(hpath.string());
    } catch (const ParseError &e) {
      throw ConfigError(hpath.string() + ": " + e.what());
    }
    if (h.num_qubits != circuit.num_qubits) {
      throw ConfigError("Hamiltonian has " + std::to_string(h.num_qubits) +
                        " qubits but the ansatz has " +
                        std::to_string(circuit.num_qubits));
    }
    loss = CircuitLoss{circuit, std::move(h), LossKind::Energy};
  }

  const std::size_t seed_threads =
      c.seed_threads == 0 ? default_thread_count() : c.seed_threads;
  const std::size_t num_seeds = c.seeds.size();
  auto trace_path = [&](std::string_view tag, std::uint64_t seed) {
    return out_dir / ("trace_" + std::string(tag) + (tag.empty() ? "" : "_") + "seed" +
                      std::to_string(seed) + ".csv");
  };

  switch (c.experiment) {
  case ExperimentKind::StatePrep:
  case ExperimentKind::Vqe:
  case ExperimentKind::Hybrid: {
    const OptimizerKind kind =
        c.experiment == ExperimentKind::Hybrid ? OptimizerKind::Hybrid : c.optimizer;
    std::vector<std::vector<TraceRecord>> traces(num_seeds);
    parallel_for(num_seeds, seed_threads, [&](std::size_t i) {
      const auto seed = c.seeds[i];
      const auto path = trace_path("", seed);
      RunTrace trace;
      {
        TraceCsvWriter writer(path, seed, c.source);
        trace = detail::run_single(c, kind, loss, seed, writer);
      }
      record_file(path);
      if (kind == OptimizerKind::Hybrid) {
        const auto gpath = out_dir / ("gradients_seed" + std::to_string(seed) + ".csv");
        write_snapshot_csv(gpath, seed, c.source, trace.snapshots);
        record_file(gpath);
      }
      traces[i] = std::move(trace.records);
    });
    write_summary_csv(out_dir / "summary.csv", detail::summarize_prefix(traces), num_seeds);
    record_file(out_dir / "summary.csv");
    break;
  }
  case ExperimentKind::CompareGd: {
    const OptimizerKind nes_kind =
        c.optimizer == OptimizerKind::Gd ? OptimizerKind::Snes : c.optimizer;
    for (const OptimizerKind kind : {nes_kind, OptimizerKind::Gd}) {
      std::vector<std::vector<TraceRecord>> traces(num_seeds);
      parallel_for(num_seeds, seed_threads, [&](std::size_t i) {
        const auto seed = c.seeds[i];
        const auto path = trace_path(to_string(kind), seed);
        {
          TraceCsvWriter writer(path, seed, c.source);
          traces[i] = detail::run_single(c, kind, loss, seed, writer).records;
        }
        record_file(path);
      });
      const auto spath = out_dir / ("summary_" + std::string(to_string(kind)) + ".csv");
      write_summary_csv(spath, detail::summarize_prefix(traces), num_seeds);
      record_file(spath);
    }
    break;
  }
  case ExperimentKind::Batch: {
    std::vector<std::vector<TraceRecord>> traces(num_seeds);
    parallel_for(num_seeds, seed_threads, [&](std::size_t i) {
      const auto seed = c.seeds[i];
      SeededRng prng(seed, kPartitionStream);
      BatchSchedule schedule;
      try {
        schedule = make_partition(circuit, c.partition, prng);
      } catch (const InvalidBatchError &e) {
        throw ConfigError(e.what());
      }
      BatchConfig bc{c.optimizer == OptimizerKind::Xnes ? NesVariant::Full
                                                        : NesVariant::Separable,
                     detail::nes_config(c), c.init_sigma, c.batch_order};
      const auto path = trace_path("", seed);
      {
        TraceCsvWriter writer(path, seed, c.source);
        traces[i] = batch_optimize(loss, detail::random_center(seed, circuit.num_params()),
                                   std::move(schedule), bc, seed, writer.sink())
                        .trace.records;
      }
      record_file(path);
    });
    write_summary_csv(out_dir / "summary.csv", detail::summarize_prefix(traces), num_seeds);
    record_file(out_dir / "summary.csv");
    break;
  }
  case ExperimentKind::VarianceScan: {
    PauliSum observable;
    try {
      observable = parse_pauli_file("qubits " + std::to_string(circuit.num_qubits) +
                                    "\n1 " + c.scan_observable + "\n");
    } catch (const ParseError &e) {
      throw ConfigError(std::string("variance_scan.observable: ") + e.what());
    }
    for (const auto seed : c.seeds) {
      VarianceScanConfig vc{circuit,      observable,    c.scan_inits,   c.scan_sigmas,
                            c.scan_walkers, c.scan_symmetric, seed_threads};
      const auto path = out_dir / ("variance_scan_seed" + std::to_string(seed) + ".csv");
      write_variance_csv(path, seed, c.source, surrogate_gradient_variance_scan(vc, seed));
      record_file(path);
      if (!c.scan_qubit_grid.empty()) {
        const auto bpath = out_dir / ("barren_plateau_seed" + std::to_string(seed) + ".csv");
        std::ofstream out(bpath);
        out << "# nesqc-barren v1 version=" << kVersion << " seed=" << seed
            << " config=" << c.source.dump() << '\n'
            << kBarrenColumns << '\n';
        for (const std::size_t q : c.scan_qubit_grid) {
          AnsatzSpec spec = c.ansatz;
          spec.num_qubits = q;
          CircuitTemplate qc;
          PauliSum qobs;
          try {
            qc = build_ansatz(spec);
            qobs = parse_pauli_file("qubits " + std::to_string(q) + "\n1 " +
                                    c.scan_observable + "\n");
          } catch (const Error &e) {
            throw ConfigError(std::string("variance_scan.qubit_grid: ") + e.what());
          }
          out << q << ','
              << format_double(analytical_gradient_variance(qc, qobs, c.scan_inits, seed,
                                                            0, seed_threads))
              << '\n';
        }
        record_file(bpath);
      }
    }
    break;
  }
  }
  if (c.experiment == ExperimentKind::Vqe && circuit.num_qubits <= kMaxExactQubits) {
    report.exact_ground_energy = exact_ground_energy(std::get<PauliSum>(loss.observable));
    std::ofstream(out_dir / "reference.txt")
        << "exact_ground_energy=" << format_double(*report.exact_ground_energy) << '\n';
    record_file(out_dir / "reference.txt");
  }
  std::sort(report.files.begin(), report.files.end());
  return report;
}

} // namespace nesqc
