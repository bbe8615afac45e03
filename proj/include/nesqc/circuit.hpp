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

#include <array>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nesqc/errors.hpp"

namespace nesqc {

enum class GateKind { RX, RY, RZ, CZ };

constexpr std::string_view to_string(GateKind kind) noexcept {
  switch (kind) {
  case GateKind::RX:
    return "RX";
  case GateKind::RY:
    return "RY";
  case GateKind::RZ:
    return "RZ";
  case GateKind::CZ:
    return "CZ";
  }
  return "?";
}

/// Angle read from params[index] at execution time.
struct ParamSlot {
  std::size_t index;
};

/// Angle baked into the circuit, in radians.
struct FixedAngle {
  double radians;
};

using AngleSource = std::variant<ParamSlot, FixedAngle>;

/**
 * One gate. Rotations act on qubits[0] and ignore qubits[1]; CZ acts on the
 * ordered pair and ignores the angle.
 */
struct Gate {
  GateKind kind;
  std::array<std::size_t, 2> qubits{};
  AngleSource angle = FixedAngle{0.0};

  static Gate rotation(GateKind kind, std::size_t qubit, AngleSource angle) {
    return Gate{kind, {qubit, qubit}, angle};
  }
  static Gate cz(std::size_t a, std::size_t b) {
    return Gate{GateKind::CZ, {a, b}, FixedAngle{0.0}};
  }

  [[nodiscard]] bool is_rotation() const noexcept {
    return kind != GateKind::CZ;
  }
};

/// Where a parameter slot lives in the layered circuit.
struct SlotInfo {
  std::size_t layer;
  std::size_t qubit;
};

/**
 * The ansatz U(theta): an ordered gate list over `num_qubits` qubits whose
 * parameterized rotations each own exactly one slot in [0, num_params).
 */
struct CircuitTemplate {
  std::size_t num_qubits = 0;
  std::size_t num_layers = 0;
  std::vector<Gate> gates;
  std::vector<SlotInfo> slots; // indexed by slot

  [[nodiscard]] std::size_t num_params() const noexcept { return slots.size(); }

  /// Throws InvalidSpecError unless targets are in range, CZ targets are
  /// distinct and every slot is referenced exactly once.
  void validate() const {
    std::vector<int> uses(slots.size(), 0);
    for (const auto &g : gates) {
      if (g.qubits[0] >= num_qubits || g.qubits[1] >= num_qubits) {
        throw InvalidSpecError("gate target out of range");
      }
      if (g.kind == GateKind::CZ) {
        if (g.qubits[0] == g.qubits[1]) {
          throw InvalidSpecError("CZ targets must be distinct");
        }
        continue;
      }
      if (const auto *slot = std::get_if<ParamSlot>(&g.angle)) {
        if (slot->index >= slots.size()) {
          throw InvalidSpecError("parameter slot out of range");
        }
        ++uses[slot->index];
      }
    }
    for (int count : uses) {
      if (count != 1) {
        throw InvalidSpecError("every parameter slot must be used exactly once");
      }
    }
  }
};

/**
 * Line-based provenance dump. First line `circuit qubits <Q> layers <L>
 * params <P>`, then one gate per line: `<KIND> <q>` followed by
 * `slot <i>` or `fixed <radians>`, or `CZ <a> <b>`.
 */
inline std::string serialize(const CircuitTemplate &circuit) {
  std::ostringstream out;
  out << "circuit qubits " << circuit.num_qubits << " layers "
      << circuit.num_layers << " params " << circuit.num_params() << '\n';
  for (const auto &g : circuit.gates) {
    out << to_string(g.kind) << ' ' << g.qubits[0];
    if (g.kind == GateKind::CZ) {
      out << ' ' << g.qubits[1] << '\n';
      continue;
    }
    if (const auto *slot = std::get_if<ParamSlot>(&g.angle)) {
      out << " slot " << slot->index << '\n';
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::get<FixedAngle>(g.angle).radians);
      out << " fixed " << buf << '\n';
    }
  }
  return out.str();
}

} // namespace nesqc
