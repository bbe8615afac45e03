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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "nesqc/simulator.hpp"
#include "support/oracles.hpp"
#include "support/random_circuit.hpp"

using namespace nesqc;
using Catch::Approx;
constexpr double kPi = std::numbers::pi;

namespace {

CircuitTemplate single_ry() {
  CircuitTemplate c{1, 1, {Gate::rotation(GateKind::RY, 0, ParamSlot{0})}, {{0, 0}}};
  return c;
}

} // namespace

TEST_CASE("RY(pi) flips |0> to |1>", "[simulator]") {
  const auto s = apply_gate(StateVector(1), Gate::rotation(GateKind::RY, 0, FixedAngle{}), kPi);
  CHECK(std::abs(s[0]) < 1e-15);
  CHECK(s[1].real() == Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(s[1].imag()) < 1e-15);
}

TEST_CASE("CZ negates |11>", "[simulator]") {
  const auto s = apply_gate(StateVector::basis(2, 3), Gate::cz(0, 1), 0.0);
  CHECK(s[3].real() == -1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto t = apply_gate(StateVector::basis(2, i), Gate::cz(1, 0), 0.0);
    CHECK(t[i].real() == (i == 3 ? -1.0 : 1.0));
  }
}

TEST_CASE("RZ is a phase on |0>", "[simulator]") {
  const double theta = 0.73;
  const auto s = apply_gate(StateVector(1), Gate::rotation(GateKind::RZ, 0, FixedAngle{}), theta);
  CHECK(std::abs(s[0] - std::polar(1.0, -theta / 2)) < 1e-15);
  CHECK(vacuum_projector_expectation(s) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gate targets are validated", "[simulator]") {
  StateVector s(2);
  CHECK_THROWS_AS(s.apply(Gate::rotation(GateKind::RX, 2, FixedAngle{}), 0.1), IndexError);
  CHECK_THROWS_AS(s.apply(Gate::cz(0, 5), 0.0), IndexError);
  CHECK_THROWS_AS(StateVector(0), InvalidDimensionError);
}

TEST_CASE("run_circuit examples", "[simulator]") {
  CircuitTemplate empty{2, 0, {}, {}};
  const auto s = run_circuit(empty, std::vector<double>{});
  CHECK(s[0].real() == 1.0);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(s[i] == Complex{});
  }

  const auto c = single_ry();
  const auto t = run_circuit(c, std::vector<double>{kPi / 2});
  CHECK(t[0].real() == Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(t[1].real() == Approx(1 / std::sqrt(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(run_circuit(c, std::vector<double>{}), ArityError);
  CHECK_THROWS_AS(run_circuit(c, std::vector<double>{1.0, 2.0}), ArityError);
}

TEST_CASE("vacuum projector and state-prep fitness examples", "[simulator]") {
  CHECK(vacuum_projector_expectation(StateVector(3)) == 1.0);
  CHECK(vacuum_projector_expectation(StateVector::basis(2, 1)) == 0.0);
  const auto c = single_ry();
  CHECK(vacuum_projector_expectation(run_circuit(c, std::vector<double>{kPi / 2})) ==
        Approx(0.5).epsilon(1e-14));
  CHECK(stateprep_fitness(c, std::vector<double>{0.0}) == 0.0);
  CHECK(stateprep_fitness(c, std::vector<double>{kPi / 2}) == Approx(0.25).epsilon(1e-14));
  CHECK(stateprep_fitness(c, std::vector<double>{kPi}) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Pauli expectation examples", "[simulator]") {
  PauliSum z0{1, {}};
  z0.add_term(1.0, {{0, Pauli::Z}});
  CHECK(pauli_expectation(StateVector(1), z0) == 1.0);

  PauliSum x0{1, {}};
  x0.add_term(1.0, {{0, Pauli::X}});
  const auto plus = run_circuit(single_ry(), std::vector<double>{kPi / 2});
  CHECK(pauli_expectation(plus, x0) == Approx(1.0).epsilon(1e-14));

  // |01> means qubit 0 in |1>, qubit 1 in |0>: basis index 1.
  PauliSum zz{2, {}};
  zz.add_term(1.0, {{0, Pauli::Z}, {1, Pauli::Z}});
  CHECK(pauli_expectation(StateVector::basis(2, 1), zz) == -1.0);

  PauliSum constant{2, {}};
  constant.add_term(-0.75, {});
  CHECK(pauli_expectation(StateVector(2), constant) == -0.75);

  CHECK_THROWS_AS(z0.add_term(1.0, {{1, Pauli::X}}), IndexError);
}

TEST_CASE("simulator matches the dense unitary oracle", "[simulator][oracle]") {
  SeededRng rng(101, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const auto Q = 1 + rng.uniform_index(4);
    const auto L = 1 + rng.uniform_index(3);
    const auto c = testing::random_circuit(rng, Q, L);
    c.validate();
    const auto params = testing::random_angles(rng, c.num_params());
    const auto state = run_circuit(c, params);
    const auto ref = oracle::final_state(c, params);
    for (std::size_t i = 0; i < state.size(); ++i) {
      REQUIRE(std::abs(state[i] - ref[static_cast<Eigen::Index>(i)]) < 1e-10);
    }
  }
}

TEST_CASE("Pauli expectation matches the dense oracle", "[simulator][oracle]") {
  SeededRng rng(102, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const auto Q = 1 + rng.uniform_index(4);
    const auto c = testing::random_circuit(rng, Q, 2);
    const auto params = testing::random_angles(rng, c.num_params());
    const auto h = testing::random_pauli_sum(rng, Q, 1 + rng.uniform_index(6));
    const double got = pauli_expectation(run_circuit(c, params), h);
    const double want =
        oracle::energy(oracle::hamiltonian_matrix(h), oracle::final_state(c, params));
    REQUIRE(std::abs(got - want) < 1e-10);
  }
}

TEST_CASE("norm and range invariants", "[simulator][property]") {
  SeededRng rng(103, 0);
  constexpr Pauli kP[] = {Pauli::X, Pauli::Y, Pauli::Z};
  for (int trial = 0; trial < 100; ++trial) {
    const auto Q = 1 + rng.uniform_index(6);
    const auto c = testing::random_circuit(rng, Q, 1 + rng.uniform_index(4));
    const auto params = testing::random_angles(rng, c.num_params());
    StateVector s(Q);
    for (const auto &g : c.gates) {
      s.apply(g, resolve_angle(g, params));
      REQUIRE(std::abs(s.norm_squared() - 1.0) < 1e-10);
    }
    const double e = vacuum_projector_expectation(s);
    REQUIRE(e >= 0.0);
    REQUIRE(e <= 1.0 + 1e-12);
    const double f = stateprep_fitness(c, params);
    REQUIRE(f >= 0.0);
    REQUIRE(f <= 1.0 + 1e-12);

    PauliSum string{Q, {}};
    std::map<std::size_t, Pauli> ops;
    for (std::size_t q = 0; q < Q; ++q) {
      ops[q] = kP[rng.uniform_index(3)];
    }
    string.add_term(1.0, ops);
    REQUIRE(std::abs(pauli_expectation(s, string)) <= 1.0 + 1e-10);
  }
}
