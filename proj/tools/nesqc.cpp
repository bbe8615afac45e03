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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nesqc/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int run_command(const std::string &config_path, const std::vector<std::uint64_t> &seeds,
                const std::string &out, const std::vector<std::string> &overrides,
                std::size_t threads) {
  nlohmann::json doc = nesqc::load_config_document(config_path);
  for (const auto &o : overrides) {
    nesqc::apply_override(doc, o);
  }
  if (!seeds.empty()) {
    doc["seeds"] = seeds;
  }
  if (!out.empty()) {
    doc["output"] = out;
  }
  if (threads > 0) {
    doc["threads"]["seeds"] = threads;
  }
  const auto config = nesqc::parse_experiment_config(doc);
  const auto report = nesqc::run_experiment(
      config, std::filesystem::path(config_path).parent_path());
  if (report.exact_ground_energy) {
    std::printf("exact_ground_energy %s\n",
                nesqc::format_double(*report.exact_ground_energy).c_str());
  }
  for (const auto &f : report.files) {
    std::printf("wrote %s\n", f.string().c_str());
  }
  return kExitOk;
}

int summarize_command(const std::vector<std::string> &traces, const std::string &out) {
  std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
  nesqc::write_summary_csv(out, nesqc::summarize_files(paths), paths.size());
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Natural evolution strategies for variational quantum circuits"};
  app.set_version_flag("--version", std::string(nesqc::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  auto *run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--seed", seeds, "Seed, replacing the config's list; repeatable")
      ->allow_extra_args(false);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--override", overrides, "Config override key.path=value")
      ->allow_extra_args(false);
  run->add_option("--threads", threads, "Concurrent seeds (default: all cores)");

  std::vector<std::string> traces;
  std::string summary_out;
  auto *summarize = app.add_subcommand("summarize", "Per-iteration mean/min/max of traces");
  summarize->add_option("traces", traces, "Trace CSV files")->required();
  summarize->add_option("--out", summary_out, "Summary CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      return run_command(config_path, seeds, out_dir, overrides, threads);
    }
    return summarize_command(traces, summary_out);
  } catch (const nesqc::ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const nesqc::AlignmentError &e) {
    std::fprintf(stderr, "alignment error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
