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
#include <numeric>
#include <utility>
#include <vector>

#include "nesqc/nes.hpp"
#include "support/oracles.hpp"

using namespace nesqc;
using Catch::Approx;

namespace {

WalkerBatch batch_from(const SearchDistribution &dist, const DenseMatrix &samples,
                       const std::vector<double> &fitness) {
  WalkerBatch b = map_samples(dist, samples);
  for (std::size_t n = 0; n < fitness.size(); ++n) {
    b.fitness[static_cast<Eigen::Index>(n)] = fitness[n];
  }
  return b;
}

double sphere(std::span<const double> z) {
  double s = 0.0;
  for (double x : z) {
    s += x * x;
  }
  return s;
}

} // namespace

TEST_CASE("utility examples", "[nes]") {
  const auto u2 = compute_utilities(2);
  CHECK(u2[0] == Approx(0.5).epsilon(1e-15));
  CHECK(u2[1] == Approx(-0.5).epsilon(1e-15));
  const auto u4 = compute_utilities(4);
  const double want[] = {0.4804, 0.0196, -0.25, -0.25};
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(u4[i] - want[i]) < 1e-4);
  }
  CHECK_THROWS_AS(compute_utilities(1), InvalidPopulationError);
  CHECK_THROWS_AS(compute_utilities(0), InvalidPopulationError);
}

TEST_CASE("utility properties", "[nes][property]") {
  for (std::size_t k = 2; k <= 64; ++k) {
    const auto u = compute_utilities(k);
    const auto ref = oracle::utilities(k);
    REQUIRE(std::abs(std::accumulate(u.begin(), u.end(), 0.0)) < 1e-12);
    for (std::size_t n = 0; n < k; ++n) {
      REQUIRE(std::abs(u[n] - ref[n]) < 1e-15);
      if (n > 0) {
        REQUIRE(u[n] <= u[n - 1]);
      }
    }
    for (std::size_t n = (k + 1) / 2; n < k; ++n) {
      REQUIRE(u[n] == Approx(-1.0 / static_cast<double>(k)).margin(1e-15));
    }
  }
}

TEST_CASE("default learning rates", "[nes]") {
  const auto r1 = default_learning_rates(1);
  CHECK(r1.eta_mu == 1.0);
  CHECK(r1.eta_s == Approx(1.8).epsilon(1e-14));
  CHECK(r1.eta_B == Approx(1.8).epsilon(1e-14));
  CHECK(r1.eta_sigma == Approx(0.6).epsilon(1e-14));
  CHECK(default_learning_rates(16).eta_sigma == Approx(0.018039339757).margin(1e-11));
  CHECK(default_learning_rates(16).eta_s == Approx(0.054118019271).margin(1e-11));
  CHECK(default_learning_rates(50).eta_sigma == Approx(0.0039100306711).margin(1e-12));
  CHECK_THROWS_AS(default_learning_rates(0), InvalidDimensionError);
}

TEST_CASE("default population", "[nes]") {
  CHECK(default_population(1) == 4);
  CHECK(default_population(50) == 16);
  CHECK(NesConfig{}.population == 16);
}

TEST_CASE("sample mapping examples", "[nes]") {
  DenseMatrix zero = DenseMatrix::Zero(3, 4);
  Vector mu(3);
  mu << 1, 2, 3;
  const auto iso = map_samples(Isotropic{mu, 0.7}, zero);
  for (Eigen::Index n = 0; n < 4; ++n) {
    CHECK(iso.points.col(n) == mu);
  }

  Vector sigma(2);
  sigma << 2, 3;
  DenseMatrix s(2, 1);
  s << 1, -1;
  const auto sep = map_samples(Separable{Vector::Zero(2), sigma}, s);
  CHECK(sep.points(0, 0) == 2.0);
  CHECK(sep.points(1, 0) == -3.0);

  SeededRng rng(3, 0);
  DenseMatrix r(4, 5);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    r.data()[i] = rng.standard_normal();
  }
  Vector m4 = Vector::LinSpaced(4, -1, 1);
  const auto full = map_samples(Full{m4, 0.3, DenseMatrix::Identity(4, 4)}, r);
  const auto same = map_samples(Isotropic{m4, 0.3}, r);
  CHECK(full.points == same.points);
}

TEST_CASE("walker streams do not depend on evaluation order", "[nes]") {
  Vector mu = Vector::Zero(3);
  auto a = walker_streams(5, 4);
  auto b = walker_streams(5, 4);
  const auto first = sample_walkers(Separable{mu, Vector::Ones(3)}, a);
  const auto again = sample_walkers(Separable{mu, Vector::Ones(3)}, b);
  CHECK(first.samples == again.samples);
  SeededRng lone(5, 2);
  CHECK(first.samples.col(2) == sample_standard_normal_vector(lone, 3));
}

TEST_CASE("canonical gradient estimate examples", "[nes]") {
  const Isotropic d{Vector::Zero(2), 0.5};
  DenseMatrix s(2, 1);
  s << 1, 0;
  auto g = canonical_gradient_estimate(batch_from(d, s, {2.0}), 0.5);
  CHECK(g[0] == 4.0);
  CHECK(g[1] == 0.0);

  DenseMatrix pair(2, 2);
  pair << 1, -1, 0, 0;
  CHECK(canonical_gradient_estimate(batch_from(d, pair, {1.0, 1.0}), 0.5).norm() == 0.0);
  CHECK(canonical_gradient_estimate(batch_from(d, pair, {0.0, 0.0}), 0.5).norm() == 0.0);
  CHECK_THROWS_AS(canonical_gradient_estimate(batch_from(d, s, {1.0}), 0.0),
                  InvalidScaleError);
  CHECK_THROWS_AS(canonical_gradient_estimate(batch_from(d, s, {std::nan("")}), 0.5),
                  EvaluationError);
}

TEST_CASE("canonical estimate is unbiased for linear fitness", "[nes][property]") {
  Vector a(3);
  a << 0.5, -1.0, 2.0;
  const Isotropic d{Vector::Constant(3, 0.2), 0.3};
  auto streams = walker_streams(77, 4);
  const int batches = 20000;
  Vector mean_g = Vector::Zero(3);
  Vector sq = Vector::Zero(3);
  for (int i = 0; i < batches; ++i) {
    auto b = sample_walkers(d, streams);
    for (Eigen::Index n = 0; n < 4; ++n) {
      b.fitness[n] = a.dot(b.points.col(n));
    }
    const Vector g = canonical_gradient_estimate(b, d.sigma);
    mean_g += g;
    sq += g.cwiseProduct(g);
  }
  mean_g /= batches;
  const Vector var = sq / batches - mean_g.cwiseProduct(mean_g);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(mean_g[i] - a[i]) < 3 * std::sqrt(var[i] / batches));
  }
}

TEST_CASE("Fisher estimate examples", "[nes]") {
  DenseMatrix s(2, 1);
  s << 1, 0;
  const DenseMatrix f = estimate_fisher(s, 1.0);
  CHECK(f(0, 0) == 1.0);
  CHECK(f(0, 1) == 0.0);
  CHECK(f(1, 1) == 0.0);
  CHECK((estimate_fisher(s, 2.0) - f / 4.0).norm() == 0.0);

  Vector g(2);
  g << 1, 1;
  const Vector x = apply_inverse_fisher(f, g);
  CHECK(x.allFinite());
  CHECK(x[0] == Approx(1.0 / (1.0 + kFisherRidge)).epsilon(1e-12));
  CHECK(x[1] == Approx(1.0 / kFisherRidge).epsilon(1e-6));

  SeededRng rng(4, 0);
  DenseMatrix many(3, 100000);
  for (Eigen::Index i = 0; i < many.size(); ++i) {
    many.data()[i] = rng.standard_normal();
  }
  CHECK((estimate_fisher(many, 1.0) - DenseMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
        0.02);
}

TEST_CASE("sNES hand-executed step", "[nes]") {
  const Separable d{Vector::Constant(1, 1.0), Vector::Constant(1, 0.5)};
  DenseMatrix s(1, 2);
  s << 1, -1;
  auto b = map_samples(d, s);
  b.fitness << sphere(std::span<const double>(b.points.col(0).data(), 1)),
      sphere(std::span<const double>(b.points.col(1).data(), 1));
  NesConfig cfg;
  cfg.population = 2;
  const auto next = snes_step(d, b, cfg);
  CHECK(next.mu[0] == Approx(0.5).epsilon(1e-15));
  CHECK(next.sigma[0] == 0.5);
}

TEST_CASE("sNES degenerate rankings stay bounded", "[nes]") {
  const Separable d{Vector::Zero(2), Vector::Constant(2, 0.3)};
  SeededRng rng(8, 0);
  DenseMatrix s(2, 6);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s.data()[i] = rng.standard_normal();
  }
  const auto next = snes_step(d, batch_from(d, s, std::vector<double>(6, 1.0)), NesConfig{});
  CHECK(next.mu.allFinite());
  CHECK((next.sigma.array() > 0).all());

  const auto w = walker_utilities(Vector::Constant(6, 1.0));
  const auto u = compute_utilities(6);
  for (Eigen::Index n = 0; n < 6; ++n) {
    CHECK(w[n] == u[static_cast<std::size_t>(n)]);
  }
  CHECK_THROWS_AS(snes_step(d, batch_from(d, s.leftCols(1), {1.0}), NesConfig{}),
                  InvalidPopulationError);
  auto bad = batch_from(d, s, std::vector<double>(6, 1.0));
  bad.fitness[3] = INFINITY;
  CHECK_THROWS_AS(snes_step(d, bad, NesConfig{}), EvaluationError);
}

TEST_CASE("xNES keeps sigma and B for a zero natural gradient", "[nes]") {
  // Antithetic pair: s s^T is shared and the utilities sum to zero.
  const Full d{Vector::Zero(2), 0.4, DenseMatrix::Identity(2, 2)};
  DenseMatrix s(2, 2);
  s << 0.3, -0.3, 1.2, -1.2;
  auto b = batch_from(d, s, {1.0, 2.0});
  NesConfig cfg;
  cfg.population = 2;
  const auto next = xnes_step(d, b, cfg);
  CHECK(next.sigma == d.sigma);
  CHECK((next.shape - d.shape).norm() < 1e-15);
}

TEST_CASE("xNES and sNES agree in one dimension", "[nes]") {
  SeededRng rng(9, 0);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix s(1, 8);
    std::vector<double> f(8);
    for (int n = 0; n < 8; ++n) {
      s(0, n) = rng.standard_normal();
      f[static_cast<std::size_t>(n)] = rng.uniform();
    }
    const double mu = rng.uniform(-1, 1), sigma = rng.uniform(0.1, 1.0);
    NesConfig cfg;
    cfg.rates = LearningRates{1.0, 0.7, 0.7, 0.7};
    const Separable sd{Vector::Constant(1, mu), Vector::Constant(1, sigma)};
    const Full fd{Vector::Constant(1, mu), sigma, DenseMatrix::Identity(1, 1)};
    const auto a = snes_step(sd, batch_from(sd, s, f), cfg);
    const auto b = xnes_step(fd, batch_from(fd, s, f), cfg);
    REQUIRE(a.mu[0] == Approx(b.mu[0]).epsilon(1e-14));
    REQUIRE(a.sigma[0] == Approx(b.sigma).epsilon(1e-14));
    REQUIRE(b.shape(0, 0) == Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("rank invariance under monotone transforms", "[nes][property]") {
  SeededRng rng(10, 0);
  const std::size_t d = 5, k = 9;
  for (int trial = 0; trial < 50; ++trial) {
    const Separable sd{Vector::Random(d), Vector::Constant(d, 0.2)};
    const Full fd{Vector::Random(d), 0.2, DenseMatrix::Identity(d, d)};
    DenseMatrix s(d, k);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      s.data()[i] = rng.standard_normal();
    }
    std::vector<double> f(k), g(k);
    for (std::size_t n = 0; n < k; ++n) {
      f[n] = rng.uniform(-3, 3);
      g[n] = std::exp(2 * f[n]) - 7.0;
    }
    NesConfig cfg;
    cfg.population = k;
    const auto a = snes_step(sd, batch_from(sd, s, f), cfg);
    const auto b = snes_step(sd, batch_from(sd, s, g), cfg);
    REQUIRE(a.mu == b.mu);
    REQUIRE(a.sigma == b.sigma);
    const auto c = xnes_step(fd, batch_from(fd, s, f), cfg);
    const auto e = xnes_step(fd, batch_from(fd, s, g), cfg);
    REQUIRE(c.mu == e.mu);
    REQUIRE(c.sigma == e.sigma);
    REQUIRE(c.shape == e.shape);
  }
}

TEST_CASE("spread statistics", "[nes]") {
  Vector sigma(3);
  sigma << 0.1, 0.5, 0.2;
  CHECK(spread(Separable{Vector::Zero(3), sigma}) == 0.5);
  CHECK(spread(Isotropic{Vector::Zero(3), 0.25}) == 0.25);
  DenseMatrix b(2, 2);
  b << 2, 0, 1, 0.5;
  const Full f{Vector::Zero(2), 0.5, b};
  CHECK(spread(f) == Approx(1.0).epsilon(1e-15)); // 0.25 * max|B B^T| = 0.25 * 4
}

TEST_CASE("optimize stops immediately when converged", "[nes]") {
  NesConfig cfg;
  const auto r = optimize(sphere, Separable{Vector::Ones(3), Vector::Constant(3, 1e-9)}, cfg, 1);
  REQUIRE(r.trace.records.size() == 1);
  CHECK(r.trace.records[0].iteration == 0);
  CHECK(r.trace.records[0].evaluations == 0);
}

TEST_CASE("optimize evaluation bookkeeping and trace invariants", "[nes]") {
  NesConfig cfg;
  cfg.max_iterations = 25;
  cfg.population = 7;
  std::size_t calls = 0;
  auto counted = [&](std::span<const double> z) {
    ++calls;
    return sphere(z);
  };
  std::vector<TraceRecord> streamed;
  const auto r = optimize(counted, Separable{Vector::Ones(4), Vector::Constant(4, 0.1)}, cfg,
                          3, [&](const TraceRecord &rec) { streamed.push_back(rec); });
  REQUIRE(r.trace.records.size() == 26);
  REQUIRE(streamed.size() == 26);
  for (std::size_t t = 0; t < r.trace.records.size(); ++t) {
    CHECK(r.trace.records[t].iteration == t);
    CHECK(r.trace.records[t].evaluations == 7 * t);
  }
  CHECK(calls == 7 * 25 + 26);
}

TEST_CASE("optimize is independent of walker threads", "[nes]") {
  auto run = [](std::size_t threads, bool full) {
    NesConfig cfg;
    cfg.max_iterations = 40;
    cfg.threads = threads;
    SearchDistribution init =
        full ? SearchDistribution{Full{Vector::Ones(6), 0.3, DenseMatrix::Identity(6, 6)}}
             : SearchDistribution{Separable{Vector::Ones(6), Vector::Constant(6, 0.3)}};
    return optimize(sphere, init, cfg, 12).trace.records;
  };
  for (bool full : {false, true}) {
    const auto a = run(1, full);
    const auto b = run(4, full);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].loss == b[i].loss);
      REQUIRE(a[i].spread_max == b[i].spread_max);
    }
  }
}

TEST_CASE("optimize propagates evaluation errors with a partial trace", "[nes]") {
  std::size_t calls = 0;
  auto flaky = [&](std::span<const double> z) {
    return ++calls > 40 ? std::nan("") : sphere(z);
  };
  std::vector<TraceRecord> streamed;
  NesConfig cfg;
  CHECK_THROWS_AS(optimize(flaky, Separable{Vector::Ones(2), Vector::Constant(2, 0.1)}, cfg, 1,
                           [&](const TraceRecord &r) { streamed.push_back(r); }),
                  EvaluationError);
  CHECK(!streamed.empty());
  CHECK_THROWS_AS(optimize(sphere, Separable{Vector(), Vector()}, cfg, 1),
                  InvalidDimensionError);
  cfg.population = 1;
  CHECK_THROWS_AS(optimize(sphere, Separable{Vector::Ones(2), Vector::Ones(2)}, cfg, 1),
                  InvalidPopulationError);
  CHECK_NOTHROW(optimize(sphere, Isotropic{Vector::Ones(2), 0.1}, NesConfig{1, {}, 3}, 1));
}

TEST_CASE("canonical ES descends on the sphere", "[nes]") {
  NesConfig cfg;
  cfg.max_iterations = 300;
  // The natural step rescales by F^-1 ~ sigma^2, so its rate is 1 / sigma^2 larger.
  for (auto [update, eta] : {std::pair{CanonicalUpdate::Plain, 0.05},
                             std::pair{CanonicalUpdate::Natural, 5.0}}) {
    cfg.canonical_update = update;
    cfg.rates = LearningRates{eta, 1, 1, 1};
    const auto r = optimize(sphere, Isotropic{Vector::Ones(3), 0.1}, cfg, 2);
    CHECK(r.trace.records.back().loss < 0.1 * r.trace.records.front().loss);
  }
}

TEST_CASE("sNES and xNES minimize the sphere", "[nes]") {
  NesConfig cfg;
  cfg.max_iterations = 300;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = optimize(sphere, Separable{Vector::Ones(4), Vector::Constant(4, 0.5)}, cfg, seed);
    CHECK(sphere(std::span<const double>(s.best.data(), 4)) < 1e-6);
    const auto x =
        optimize(sphere, Full{Vector::Ones(4), 0.5, DenseMatrix::Identity(4, 4)}, cfg, seed);
    CHECK(sphere(std::span<const double>(x.best.data(), 4)) < 1e-6);
  }
}
