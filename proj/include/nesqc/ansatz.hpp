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

#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "nesqc/circuit.hpp"
#include "nesqc/errors.hpp"
#include "nesqc/rng.hpp"

namespace nesqc {

enum class AnsatzFamily { RPQC, ALPQC };

struct AnsatzSpec {
  AnsatzFamily family = AnsatzFamily::RPQC;
  std::size_t num_qubits = 2;
  std::size_t num_layers = 1;
  std::uint64_t structure_seed = 0; // RPQC gate kinds only
};

namespace detail {

// Stream reserved for architecture draws, separate from initialization and
// walker streams that share the same seed space.
inline constexpr std::uint64_t kStructureStream = 0x5354'5255'4354ULL;

inline void add_basis_rotation(CircuitTemplate &c) {
  for (std::size_t q = 0; q < c.num_qubits; ++q) {
    c.gates.push_back(
        Gate::rotation(GateKind::RY, q, FixedAngle{std::numbers::pi / 4}));
  }
}

inline void add_rotation(CircuitTemplate &c, GateKind kind, std::size_t layer,
                         std::size_t qubit) {
  const std::size_t slot = c.slots.size();
  c.slots.push_back({layer, qubit});
  c.gates.push_back(Gate::rotation(kind, qubit, ParamSlot{slot}));
}

} // namespace detail

/**
 * Random parameterized circuit: a fixed RY(pi/4) layer on every qubit, then
 * `layers` repetitions of Q rotations with kinds drawn uniformly from
 * {RX, RY, RZ} and a CZ chain (0,1), (1,2), ..., (Q-2, Q-1).
 */
inline CircuitTemplate build_rpqc(std::size_t qubits, std::size_t layers,
                                  std::uint64_t structure_seed) {
  if (qubits < 2) {
    throw InvalidSpecError("RPQC needs at least 2 qubits");
  }
  if (layers < 1) {
    throw InvalidSpecError("RPQC needs at least 1 layer");
  }
  CircuitTemplate c;
  c.num_qubits = qubits;
  c.num_layers = layers;
  c.gates.reserve(qubits + layers * (2 * qubits - 1));
  c.slots.reserve(qubits * layers);
  detail::add_basis_rotation(c);
  SeededRng rng(structure_seed, detail::kStructureStream);
  constexpr GateKind kinds[] = {GateKind::RX, GateKind::RY, GateKind::RZ};
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t q = 0; q < qubits; ++q) {
      detail::add_rotation(c, kinds[rng.uniform_index(3)], l, q);
    }
    for (std::size_t q = 0; q + 1 < qubits; ++q) {
      c.gates.push_back(Gate::cz(q, q + 1));
    }
  }
  return c;
}

/**
 * Alternating-layer circuit: fixed RY(pi/4) layer, then per layer RY on
 * qubits 0..Q-2, CZ on (0,1),(2,3),..., RY on qubits 1..Q-1, CZ on
 * (1,2),(3,4),.... Every layer owns 2(Q-1) slots.
 */
inline CircuitTemplate build_alpqc(std::size_t qubits, std::size_t layers) {
  if (qubits < 3) {
    throw InvalidSpecError("ALPQC needs at least 3 qubits");
  }
  if (layers < 1) {
    throw InvalidSpecError("ALPQC needs at least 1 layer");
  }
  CircuitTemplate c;
  c.num_qubits = qubits;
  c.num_layers = layers;
  detail::add_basis_rotation(c);
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t q = 0; q + 1 < qubits; ++q) {
      detail::add_rotation(c, GateKind::RY, l, q);
    }
    for (std::size_t q = 0; q + 1 < qubits; q += 2) {
      c.gates.push_back(Gate::cz(q, q + 1));
    }
    for (std::size_t q = 1; q < qubits; ++q) {
      detail::add_rotation(c, GateKind::RY, l, q);
    }
    for (std::size_t q = 1; q + 1 < qubits; q += 2) {
      c.gates.push_back(Gate::cz(q, q + 1));
    }
  }
  return c;
}

inline CircuitTemplate build_ansatz(const AnsatzSpec &spec) {
  switch (spec.family) {
  case AnsatzFamily::RPQC:
    return build_rpqc(spec.num_qubits, spec.num_layers, spec.structure_seed);
  case AnsatzFamily::ALPQC:
    return build_alpqc(spec.num_qubits, spec.num_layers);
  }
  throw InvalidSpecError("unknown ansatz family");
}

inline AnsatzFamily parse_ansatz_family(std::string_view name) {
  if (name == "rpqc" || name == "RPQC") {
    return AnsatzFamily::RPQC;
  }
  if (name == "alpqc" || name == "ALPQC") {
    return AnsatzFamily::ALPQC;
  }
  throw InvalidSpecError("unknown ansatz family '" + std::string(name) + "'");
}

} // namespace nesqc
