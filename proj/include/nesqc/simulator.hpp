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

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "nesqc/circuit.hpp"
#include "nesqc/errors.hpp"

namespace nesqc {

using Complex = std::complex<double>;

/// Largest register the dense statevector accepts.
inline constexpr std::size_t kMaxQubits = 30;

/**
 * 2^Q complex amplitudes. Qubit q is bit q of the amplitude index, so qubit 0
 * is the least significant bit.
 */
class StateVector {
 public:
  /// |0...0>.
  explicit StateVector(std::size_t num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits == 0 || num_qubits > kMaxQubits) {
      throw InvalidDimensionError("qubit count must be in [1, 30]");
    }
    amps_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
    amps_[0] = 1.0;
  }

  /// Computational basis state |index>.
  static StateVector basis(std::size_t num_qubits, std::size_t index) {
    StateVector s(num_qubits);
    if (index >= s.size()) {
      throw IndexError("basis index out of range");
    }
    s.amps_[0] = 0.0;
    s.amps_[index] = 1.0;
    return s;
  }

  [[nodiscard]] std::size_t num_qubits() const noexcept { return num_qubits_; }
  [[nodiscard]] std::size_t size() const noexcept { return amps_.size(); }
  [[nodiscard]] std::span<const Complex> amplitudes() const noexcept {
    return amps_;
  }
  [[nodiscard]] const Complex &operator[](std::size_t i) const {
    return amps_[i];
  }

  [[nodiscard]] double norm_squared() const noexcept {
    double total = 0.0;
    for (const auto &a : amps_) {
      total += std::norm(a);
    }
    return total;
  }

  /// Applies `gate` in place; `angle` is ignored for CZ.
  void apply(const Gate &gate, double angle) {
    if (gate.qubits[0] >= num_qubits_ || gate.qubits[1] >= num_qubits_) {
      throw IndexError("gate target out of range");
    }
    switch (gate.kind) {
    case GateKind::RX: {
      const double c = std::cos(0.5 * angle);
      const double s = std::sin(0.5 * angle);
      apply_pairs(gate.qubits[0], [c, s](Complex &a0, Complex &a1) {
        const Complex mis{0.0, -s};
        const Complex n0 = c * a0 + mis * a1;
        const Complex n1 = mis * a0 + c * a1;
        a0 = n0;
        a1 = n1;
      });
      break;
    }
    case GateKind::RY: {
      const double c = std::cos(0.5 * angle);
      const double s = std::sin(0.5 * angle);
      apply_pairs(gate.qubits[0], [c, s](Complex &a0, Complex &a1) {
        const Complex n0 = c * a0 - s * a1;
        const Complex n1 = s * a0 + c * a1;
        a0 = n0;
        a1 = n1;
      });
      break;
    }
    case GateKind::RZ: {
      const Complex p0 = std::polar(1.0, -0.5 * angle);
      const Complex p1 = std::polar(1.0, 0.5 * angle);
      apply_pairs(gate.qubits[0], [p0, p1](Complex &a0, Complex &a1) {
        a0 *= p0;
        a1 *= p1;
      });
      break;
    }
    case GateKind::CZ: {
      if (gate.qubits[0] == gate.qubits[1]) {
        throw IndexError("CZ targets must be distinct");
      }
      const std::size_t mask =
          (std::size_t{1} << gate.qubits[0]) | (std::size_t{1} << gate.qubits[1]);
      for (std::size_t i = 0; i < amps_.size(); ++i) {
        if ((i & mask) == mask) {
          amps_[i] = -amps_[i];
        }
      }
      break;
    }
    }
  }

 private:
  template <class Kernel> void apply_pairs(std::size_t target, Kernel &&kernel) {
    const std::size_t stride = std::size_t{1} << target;
    const std::size_t n = amps_.size();
    for (std::size_t base = 0; base < n; base += 2 * stride) {
      for (std::size_t i = base; i < base + stride; ++i) {
        kernel(amps_[i], amps_[i + stride]);
      }
    }
  }

  std::size_t num_qubits_;
  std::vector<Complex> amps_;
};

/// Value-semantics wrapper around StateVector::apply.
inline StateVector apply_gate(StateVector state, const Gate &gate,
                              double angle) {
  state.apply(gate, angle);
  return state;
}

inline double resolve_angle(const Gate &gate, std::span<const double> params) {
  if (const auto *slot = std::get_if<ParamSlot>(&gate.angle)) {
    return params[slot->index];
  }
  return std::get<FixedAngle>(gate.angle).radians;
}

/// U(params)|0...0>, gates applied in template order.
inline StateVector run_circuit(const CircuitTemplate &circuit,
                               std::span<const double> params) {
  if (params.size() != circuit.num_params()) {
    throw ArityError("expected " + std::to_string(circuit.num_params()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  StateVector state(circuit.num_qubits);
  for (const auto &gate : circuit.gates) {
    state.apply(gate, resolve_angle(gate, params));
  }
  return state;
}

/// |<0...0|psi>|^2.
inline double vacuum_projector_expectation(const StateVector &state) {
  return std::norm(state[0]);
}

/// (1 - |<0...0|psi>|^2)^2 for psi = U(params)|0...0>.
inline double stateprep_fitness(const CircuitTemplate &circuit,
                                std::span<const double> params) {
  const double overlap = vacuum_projector_expectation(run_circuit(circuit, params));
  const double miss = 1.0 - overlap;
  return miss * miss;
}

// ---------------------------------------------------------------------------
// Pauli observables

enum class Pauli : std::uint8_t { X, Y, Z };

/// coefficient * prod_q P_q; qubits absent from `ops` carry the identity.
struct PauliTerm {
  double coefficient = 0.0;
  std::map<std::size_t, Pauli> ops;

  friend bool operator==(const PauliTerm &, const PauliTerm &) = default;
};

/// Real-weighted sum of Pauli strings on a declared register size.
struct PauliSum {
  std::size_t num_qubits = 0;
  std::vector<PauliTerm> terms;

  void add_term(double coefficient, std::map<std::size_t, Pauli> ops) {
    if (!std::isfinite(coefficient)) {
      throw InvalidSpecError("Pauli coefficient must be finite");
    }
    for (const auto &[q, p] : ops) {
      if (q >= num_qubits) {
        throw IndexError("Pauli qubit index out of range");
      }
    }
    terms.push_back({coefficient, std::move(ops)});
  }
};

namespace detail {

struct PauliMasks {
  std::size_t flip = 0;  // X or Y
  std::size_t phase = 0; // Y or Z
  unsigned num_y = 0;
};

inline PauliMasks masks_of(const PauliTerm &term) {
  PauliMasks m;
  for (const auto &[q, p] : term.ops) {
    const std::size_t bit = std::size_t{1} << q;
    if (p != Pauli::Z) {
      m.flip |= bit;
    }
    if (p != Pauli::X) {
      m.phase |= bit;
    }
    if (p == Pauli::Y) {
      ++m.num_y;
    }
  }
  return m;
}

/// i^n for n mod 4.
inline Complex i_power(unsigned n) {
  switch (n % 4) {
  case 0:
    return {1.0, 0.0};
  case 1:
    return {0.0, 1.0};
  case 2:
    return {-1.0, 0.0};
  default:
    return {0.0, -1.0};
  }
}

} // namespace detail

/// <psi|h|psi>. Throws ConsistencyError if the imaginary residue exceeds 1e-8.
inline double pauli_expectation(const StateVector &state, const PauliSum &h) {
  Complex total{0.0, 0.0};
  const auto amps = state.amplitudes();
  for (const auto &term : h.terms) {
    for (const auto &[q, p] : term.ops) {
      if (q >= state.num_qubits()) {
        throw IndexError("observable acts on qubit " + std::to_string(q) +
                         " of a " + std::to_string(state.num_qubits()) +
                         "-qubit state");
      }
    }
    const auto m = detail::masks_of(term);
    // P|i> = i^{#Y} (-1)^{popcount(i & phase)} |i ^ flip>
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < amps.size(); ++i) {
      const Complex v = std::conj(amps[i ^ m.flip]) * amps[i];
      if (std::popcount(i & m.phase) & 1U) {
        acc -= v;
      } else {
        acc += v;
      }
    }
    total += term.coefficient * detail::i_power(m.num_y) * acc;
  }
  if (std::abs(total.imag()) > 1e-8) {
    throw ConsistencyError("Pauli expectation has imaginary residue " +
                           std::to_string(total.imag()));
  }
  return total.real();
}

/// Marker for the |0...0><0...0| projector.
struct VacuumProjector {};

using Observable = std::variant<VacuumProjector, PauliSum>;

inline double expectation(const StateVector &state, const Observable &obs) {
  if (std::holds_alternative<VacuumProjector>(obs)) {
    return vacuum_projector_expectation(state);
  }
  return pauli_expectation(state, std::get<PauliSum>(obs));
}

} // namespace nesqc
