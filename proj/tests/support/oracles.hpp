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

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nesqc/circuit.hpp"
#include "nesqc/simulator.hpp"

// Reference implementations that share no code with the library kernels.
namespace nesqc::oracle {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline CMatrix kron(const CMatrix &a, const CMatrix &b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CMatrix pauli_matrix(char p) {
  CMatrix m(2, 2);
  switch (p) {
  case 'X':
    m << 0, 1, 1, 0;
    break;
  case 'Y':
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    break;
  case 'Z':
    m << 1, 0, 0, -1;
    break;
  default:
    m = CMatrix::Identity(2, 2);
  }
  return m;
}

/// cos(t/2) I - i sin(t/2) P.
inline CMatrix rotation_matrix(GateKind kind, double theta) {
  const char p = kind == GateKind::RX ? 'X' : kind == GateKind::RY ? 'Y' : 'Z';
  return std::cos(theta / 2) * CMatrix::Identity(2, 2) -
         cplx(0, 1) * std::sin(theta / 2) * pauli_matrix(p);
}

/// Kronecker product over qubits with qubit Q-1 leftmost (qubit 0 = LSB).
inline CMatrix embed(const std::vector<CMatrix> &per_qubit) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (std::size_t q = per_qubit.size(); q-- > 0;) {
    out = kron(out, per_qubit[q]);
  }
  return out;
}

inline CMatrix single_qubit_unitary(const CMatrix &u, std::size_t target, std::size_t Q) {
  std::vector<CMatrix> ops(Q, CMatrix::Identity(2, 2));
  ops[target] = u;
  return embed(ops);
}

/// CZ = (I + Z_a + Z_b - Z_a Z_b) / 2.
inline CMatrix cz_unitary(std::size_t a, std::size_t b, std::size_t Q) {
  std::vector<CMatrix> id(Q, CMatrix::Identity(2, 2));
  std::vector<CMatrix> za = id, zb = id, zab = id;
  za[a] = pauli_matrix('Z');
  zb[b] = pauli_matrix('Z');
  zab[a] = pauli_matrix('Z');
  zab[b] = pauli_matrix('Z');
  return 0.5 * (embed(id) + embed(za) + embed(zb) - embed(zab));
}

inline CMatrix circuit_unitary(const CircuitTemplate &c, std::span<const double> params) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << c.num_qubits);
  CMatrix u = CMatrix::Identity(dim, dim);
  for (const auto &g : c.gates) {
    if (g.kind == GateKind::CZ) {
      u = cz_unitary(g.qubits[0], g.qubits[1], c.num_qubits) * u;
      continue;
    }
    double theta = 0.0;
    if (const auto *slot = std::get_if<ParamSlot>(&g.angle)) {
      theta = params[slot->index];
    } else {
      theta = std::get<FixedAngle>(g.angle).radians;
    }
    u = single_qubit_unitary(rotation_matrix(g.kind, theta), g.qubits[0], c.num_qubits) * u;
  }
  return u;
}

inline CVector final_state(const CircuitTemplate &c, std::span<const double> params) {
  return circuit_unitary(c, params).col(0);
}

inline CMatrix hamiltonian_matrix(const PauliSum &h) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << h.num_qubits);
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const auto &term : h.terms) {
    std::vector<CMatrix> ops(h.num_qubits, CMatrix::Identity(2, 2));
    for (const auto &[q, p] : term.ops) {
      ops[q] = pauli_matrix(p == Pauli::X ? 'X' : p == Pauli::Y ? 'Y' : 'Z');
    }
    out += term.coefficient * embed(ops);
  }
  return out;
}

inline double energy(const CMatrix &h, const CVector &psi) {
  return (psi.adjoint() * h * psi)(0, 0).real();
}

/// (f(x + h e_j) - f(x - h e_j)) / (2h) for every j.
template <class F>
std::vector<double> central_difference(F &&f, std::span<const double> x, double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double plus = f(std::span<const double>(probe));
    probe[j] = x[j] - h;
    const double minus = f(std::span<const double>(probe));
    probe[j] = x[j];
    grad[j] = (plus - minus) / (2 * h);
  }
  return grad;
}

/// Shaping utilities evaluated term by term, best rank first.
inline std::vector<double> utilities(std::size_t k) {
  std::vector<double> raw(k);
  double total = 0.0;
  for (std::size_t n = 1; n <= k; ++n) {
    raw[n - 1] = std::max(0.0, std::log(k / 2.0 + 1.0) - std::log(static_cast<double>(n)));
    total += raw[n - 1];
  }
  for (auto &u : raw) {
    u = u / total - 1.0 / static_cast<double>(k);
  }
  return raw;
}

} // namespace nesqc::oracle
