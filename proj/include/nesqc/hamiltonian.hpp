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
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nesqc/circuit.hpp"
#include "nesqc/errors.hpp"
#include "nesqc/simulator.hpp"

namespace nesqc {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
      ++i;
    }
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) {
      ++i;
    }
    if (i > start) {
      out.push_back(s.substr(start, i - start));
    }
  }
  return out;
}

inline bool parse_decimal_index(std::string_view s, std::size_t &out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      })) {
    return false;
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Decimal literal with optional sign and exponent; no inf/nan/hex.
inline bool parse_coefficient(std::string_view s, double &out) {
  if (s.empty()) {
    return false;
  }
  for (char c : s) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
          c == '.' || c == 'e' || c == 'E')) {
      return false;
    }
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
    if (s.empty() || s.front() == '-' || s.front() == '+') {
      return false;
    }
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

} // namespace detail

/**
 * Parses the Hamiltonian text format:
 *
 *     # comment
 *     qubits 4
 *     -0.0988 I
 *     0.1712 Z0
 *     -0.0453 X0 X1 Y2 Y3
 *
 * Qubit indices follow the simulator convention (qubit 0 = least significant
 * amplitude bit). Errors are reported as ParseError with a 1-based line.
 */
inline PauliSum parse_pauli_file(std::string_view text) {
  PauliSum h;
  bool have_header = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) {
      continue;
    }
    const auto tokens = detail::split_ws(line);
    if (!have_header) {
      std::size_t n = 0;
      if (tokens.size() != 2 || tokens[0] != "qubits" ||
          !detail::parse_decimal_index(tokens[1], n) || n == 0) {
        throw ParseError(line_no, "expected 'qubits <N>' header");
      }
      h.num_qubits = n;
      have_header = true;
      continue;
    }
    double coeff = 0.0;
    if (!detail::parse_coefficient(tokens[0], coeff)) {
      throw ParseError(line_no, "malformed coefficient '" +
                                    std::string(tokens[0]) + "'");
    }
    if (tokens.size() < 2) {
      throw ParseError(line_no, "term has no Pauli operator");
    }
    PauliTerm term{coeff, {}};
    if (tokens.size() == 2 && tokens[1] == "I") {
      h.terms.push_back(std::move(term));
      continue;
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      Pauli p{};
      switch (tok.front()) {
      case 'X':
        p = Pauli::X;
        break;
      case 'Y':
        p = Pauli::Y;
        break;
      case 'Z':
        p = Pauli::Z;
        break;
      default:
        throw ParseError(line_no, "unknown Pauli operator '" + std::string(tok) + "'");
      }
      std::size_t q = 0;
      if (!detail::parse_decimal_index(tok.substr(1), q)) {
        throw ParseError(line_no, "malformed qubit index in '" + std::string(tok) + "'");
      }
      if (q >= h.num_qubits) {
        throw ParseError(line_no, "qubit " + std::to_string(q) +
                                      " out of range for " +
                                      std::to_string(h.num_qubits) + " qubits");
      }
      if (!term.ops.emplace(q, p).second) {
        throw ParseError(line_no, "qubit " + std::to_string(q) + " repeated in term");
      }
    }
    h.terms.push_back(std::move(term));
  }
  if (!have_header) {
    throw ParseError(line_no, "missing 'qubits <N>' header");
  }
  return h;
}

inline PauliSum load_pauli_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open Hamiltonian file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pauli_file(buf.str());
}

/// Inverse of parse_pauli_file; coefficients printed with 17 significant digits.
inline std::string serialize(const PauliSum &h) {
  std::string out = "qubits " + std::to_string(h.num_qubits) + "\n";
  for (const auto &term : h.terms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", term.coefficient);
    out += buf;
    if (term.ops.empty()) {
      out += " I";
    }
    for (const auto &[q, p] : term.ops) {
      out += ' ';
      out += p == Pauli::X ? 'X' : (p == Pauli::Y ? 'Y' : 'Z');
      out += std::to_string(q);
    }
    out += '\n';
  }
  return out;
}

/// Largest register exact_ground_energy will densify.
inline constexpr std::size_t kMaxExactQubits = 12;

/// Dense 2^Q x 2^Q matrix of h.
inline Eigen::MatrixXcd dense_matrix(const PauliSum &h) {
  const std::size_t dim = std::size_t{1} << h.num_qubits;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  for (const auto &term : h.terms) {
    const auto masks = detail::masks_of(term);
    const Complex base = term.coefficient * detail::i_power(masks.num_y);
    for (std::size_t i = 0; i < dim; ++i) {
      const double sign = (std::popcount(i & masks.phase) & 1U) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(i ^ masks.flip), static_cast<Eigen::Index>(i)) +=
          sign * base;
    }
  }
  return m;
}

/// Minimum eigenvalue of h by dense Hermitian diagonalization.
inline double exact_ground_energy(const PauliSum &h) {
  if (h.num_qubits == 0) {
    throw SizeError("Hamiltonian declares no qubits");
  }
  if (h.num_qubits > kMaxExactQubits) {
    throw SizeError("exact diagonalization limited to " +
                    std::to_string(kMaxExactQubits) + " qubits");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
      dense_matrix(h), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw ConsistencyError("Hermitian eigensolver did not converge");
  }
  return eig.eigenvalues().minCoeff();
}

/// <psi(params)|h|psi(params)>.
inline double vqe_fitness(const CircuitTemplate &circuit,
                          std::span<const double> params, const PauliSum &h) {
  return pauli_expectation(run_circuit(circuit, params), h);
}

} // namespace nesqc
