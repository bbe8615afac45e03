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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace nesqc {

/// One optimizer iteration. Iteration 0 is the initial state.
struct TraceRecord {
  std::size_t iteration = 0;
  std::size_t evaluations = 0; // cumulative circuit evaluations spent on updates
  double loss = 0.0;           // fitness at the distribution center
  double spread_max = 0.0;     // the optimizer's stopping statistic
  std::size_t batch_cursor = 0;
  std::size_t sweep = 0;       // completed passes over all batches
};

/// Analytical gradient of the loss at the current center.
struct GradientSnapshot {
  std::size_t iteration = 0;
  std::vector<double> components;
};

struct RunTrace {
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  std::vector<GradientSnapshot> snapshots;
};

/// Optional streaming observer, called once per record as it is produced.
using TraceSink = std::function<void(const TraceRecord &)>;

namespace detail {

inline void emit(RunTrace &trace, const TraceSink &sink, TraceRecord record) {
  trace.records.push_back(record);
  if (sink) {
    sink(record);
  }
}

} // namespace detail

} // namespace nesqc
