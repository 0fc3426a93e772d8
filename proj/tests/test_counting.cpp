/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geodensity/counting.hpp"
#include "geodensity/error.hpp"

using namespace gd;

namespace {

constexpr double kPi = std::numbers::pi;

// Expected overlap of [0,1]^2 with its translate by lambda (cos, sin).
double unit_square_count(double lambda) { return 1 - 4 * lambda / kPi + lambda * lambda / kPi; }

// Same for [0,1]^3, by a product midpoint rule in (theta, phi).
double unit_cube_count(double lambda) {
  const int N = 800;
  double acc = 0, wsum = 0;
  for (int i = 0; i < N; ++i) {
    const double th = kPi * (i + 0.5) / N;
    for (int j = 0; j < 2 * N; ++j) {
      const double ph = kPi * (j + 0.5) / N;
      const double u[3] = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
      const double w = std::sin(th);
      acc += w * (1 - lambda * std::abs(u[0])) * (1 - lambda * std::abs(u[1])) *
             (1 - lambda * std::abs(u[2]));
      wsum += w;
    }
  }
  return acc / wsum;
}

GridFunction random_values(int d, int n, std::uint64_t seed, int split = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction f = GridFunction::zeros(d, n, split);
  for (auto& x : f.v) x = u(rng);
  return f;
}

GridFunction ones(int d, int n, int split = 0) { return GridFunction::constant(d, n, 1.0, split); }

CountOptions with(CountMethod m, int budget = 0, std::uint64_t seed = 1) {
  CountOptions o;
  o.method = m;
  o.budget = budget;
  o.seed = seed;
  return o;
}

} // namespace

TEST_CASE("distance count of the unit square matches the closed form") {
  for (double lambda : {0.05, 0.1, 0.2}) {
    const auto r = count_distance(ones(2, 64), ones(2, 64), lambda);
    CHECK(std::abs(r.value - unit_square_count(lambda)) <= 1e-6);
    CHECK(r.error >= 0);
    CHECK(r.error <= 1e-6);
  }
  const auto q = count_distance(ones(2, 128), ones(2, 128), 0.1, with(CountMethod::Quadrature));
  CHECK(std::abs(q.value - unit_square_count(0.1)) <= 0.005);
}

TEST_CASE("distance count of the unit cube matches a quadrature oracle") {
  const double lambda = 0.15;
  const auto r = count_distance(ones(3, 32), ones(3, 32), lambda);
  CHECK(std::abs(r.value - unit_cube_count(lambda)) <= 1e-4);
}

TEST_CASE("distance count in d = 4 reports a standard error") {
  const int n = 12;
  const double lambda = 0.25;
  const auto r = count_distance(ones(4, n), ones(4, n), lambda, with(CountMethod::Fft, 4096, 3));
  CHECK(r.error > 0);
  // Oracle: E prod (1 - lambda |u_a|) by Monte Carlo on S^3.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  double acc = 0;
  const int N = 400000;
  for (int i = 0; i < N; ++i) {
    double u[4], s = 0;
    for (double& x : u) {
      x = g(rng);
      s += x * x;
    }
    double p = 1;
    for (double x : u) p *= 1 - lambda * std::abs(x) / std::sqrt(s);
    acc += p;
  }
  CHECK(std::abs(r.value - acc / N) <= 4 * r.error + 2e-3);
}

TEST_CASE("fft and brute-force distance counts agree") {
  const auto ball = make_grid_function(SetSpec::ball({0.5, 0.5}, 0.25), 2, 24);
  // Distance 0.6 exceeds the diameter: both paths give zero.
  CHECK(std::abs(count_distance(ball, ball, 0.6).value) <= 1e-15);
  CHECK(count_distance(ball, ball, 0.6, with(CountMethod::Brute)).value == 0.0);
  const auto a = count_distance(ball, ball, 0.4);
  const auto b = count_distance(ball, ball, 0.4, with(CountMethod::Brute));
  CHECK(b.value > 0.01);
  CHECK(std::abs(a.value - b.value) <= 1e-10 * std::abs(b.value));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f0 = random_values(2, 20, seed), f1 = random_values(2, 20, seed + 100);
    const double lambda = 0.1 + 0.05 * seed;
    const auto x = count_distance(f0, f1, lambda);
    const auto y = count_distance(f0, f1, lambda, with(CountMethod::Brute));
    CHECK(std::abs(x.value - y.value) <= 1e-10 * std::max(1e-3, std::abs(y.value)));
  }
  CHECK_THROWS_AS(count_distance(ones(2, 32), ones(2, 32), 0.2, with(CountMethod::Brute)), Error);
}

TEST_CASE("distance count edge cases and preconditions") {
  CHECK(count_distance(GridFunction::zeros(2, 16), ones(2, 16), 0.3).value == 0.0);
  try {
    count_distance(ones(2, 16), ones(2, 16), 1.0 / 16);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
  CHECK_THROWS_AS(count_distance(ones(2, 16), ones(2, 16), 0.3, with(CountMethod::Rotation)), Error);
}

TEST_CASE("distance count is symmetric, bilinear and translation invariant") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 16 + 4 * trial;
    const double lambda = 0.15 + 0.05 * trial;
    const auto f = random_values(2, n, rng()), g = random_values(2, n, rng()), k = random_values(2, n, rng());
    const auto fg = count_distance(f, g, lambda), gf = count_distance(g, f, lambda);
    CHECK(std::abs(fg.value - gf.value) <= fg.error + gf.error + 1e-12);

    GridFunction mix = f;
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.3 * f[i] - 1.7 * k[i];
    const double lhs = count_distance(mix, g, lambda).value;
    const double rhs = 0.3 * fg.value - 1.7 * count_distance(k, g, lambda).value;
    CHECK(std::abs(lhs - rhs) <= 1e-9);
  }
  // Interior supports stay interior after a whole-cell shift.
  const int n = 32;
  GridFunction a = GridFunction::zeros(2, n), b = GridFunction::zeros(2, n);
  int idx[2];
  for (std::size_t i = 0; i < a.size(); ++i) {
    unflatten(i, 2, n, idx);
    if (idx[0] >= 10 && idx[0] < 18 && idx[1] >= 10 && idx[1] < 16) {
      a[i] = 1 + 0.1 * idx[0] - 0.05 * idx[1];
      const int s[2] = {idx[0] + 3, idx[1] + 5};
      b[flat_index(s, 2, n)] = a[i];
    }
  }
  CHECK(std::abs(count_distance(a, a, 0.125).value - count_distance(b, b, 0.125).value) <= 1e-9);
}

TEST_CASE("simplex counts: boundary bound, zero slots, method agreement") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto full = ones(3, 64);
  const auto r = count_simplex({full, full, full}, tri, 0.05, with(CountMethod::Rotation, 64, 2));
  CHECK(r.value >= 1 - 6 * 0.05);
  CHECK(r.value <= 1.0);

  const auto A = make_grid_function(SetSpec::random(0.5, 1.0 / 8, 11), 3, 32);
  CHECK(count_simplex({A, GridFunction::zeros(3, 32), A}, tri, 0.5, with(CountMethod::Rotation, 16)).value == 0.0);
  CHECK(count_simplex({A, A, GridFunction::zeros(3, 32)}, tri, 0.5, with(CountMethod::Iterated, 256)).value == 0.0);

  const auto rot = count_simplex({A, A, A}, tri, 0.5, with(CountMethod::Rotation, 512, 5));
  const auto it = count_simplex({A, A, A}, tri, 0.5, with(CountMethod::Iterated, 4096, 5));
  CHECK(rot.error > 0);
  CHECK(it.error > 0);
  CHECK(std::abs(rot.value - it.value) <= 3 * (rot.error + it.error));
}

TEST_CASE("simplex count preconditions") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  CHECK_THROWS_AS(count_simplex({ones(2, 16), ones(2, 16), ones(2, 16)}, tri, 0.5), Error);
  CHECK_THROWS_AS(count_simplex({ones(3, 16), ones(3, 16)}, tri, 0.5), Error);
  CHECK_THROWS_AS(count_simplex({ones(3, 16), ones(3, 16), ones(3, 16)}, tri, 0.01,
                                with(CountMethod::Rotation)),
                  Error);
}

TEST_CASE("one-edge iterated chain equals the nearest-kernel distance count") {
  const auto A = make_grid_function(SetSpec::ball({0.4, 0.5}, 0.3), 2, 48);
  const auto seg = SimplexSpec::from_vertices({{1.0, 0.0}});
  const auto it = count_simplex({A, A}, seg, 0.25, with(CountMethod::Iterated, 2048, 1));
  const auto q = count_distance(A, A, 0.25, with(CountMethod::Quadrature, 2048, 1));
  CHECK(std::abs(it.value - q.value) <= 1e-12);
}

TEST_CASE("rectangle counts: closed form, factorization, brute force") {
  const double lambda = 0.1;
  const auto one = ones(4, 32, 2);
  const auto r = count_rectangle(one, one, one, one, lambda, 1.0);
  const double expect = unit_square_count(lambda) * unit_square_count(lambda);
  CHECK(std::abs(r.value - expect) <= 1e-5);
  CHECK(std::abs(expect - 0.76713) <= 1e-4);

  // Product sets factor into two distance counts.  Each slot pair meets a
  // factor twice, so fractional boundary cells enter squared.
  const SetSpec b1 = SetSpec::ball({0.5, 0.5}, 0.35), b2 = SetSpec::box({0.4, 0.5}, {0.3, 0.45});
  const auto B = make_grid_function(SetSpec::product(b1, b2), 4, 32);
  auto B1 = make_grid_function(b1, 2, 32), B2 = make_grid_function(b2, 2, 32);
  for (auto& x : B1.v) x *= x;
  for (auto& x : B2.v) x *= x;
  for (double c : {1.0, 0.5}) {
    const auto t = count_rectangle(B, B, B, B, 0.25, c, with(CountMethod::Fft, 512));
    const double f = count_distance(B1, B1, 0.25, with(CountMethod::Fft, 512)).value *
                     count_distance(B2, B2, 0.25 * c, with(CountMethod::Fft, 512)).value;
    CHECK(std::abs(t.value - f) <= 1e-9);
  }

  const auto g00 = random_values(4, 10, 1, 2), g10 = random_values(4, 10, 2, 2),
             g01 = random_values(4, 10, 3, 2), g11 = random_values(4, 10, 4, 2);
  const auto fa = count_rectangle(g00, g10, g01, g11, 0.3, 0.7, with(CountMethod::Fft, 64));
  const auto fb = count_rectangle(g00, g10, g01, g11, 0.3, 0.7, with(CountMethod::Brute, 64));
  CHECK(std::abs(fa.value - fb.value) <= 1e-10 * std::max(1e-3, std::abs(fb.value)));

  CHECK(count_rectangle(one, GridFunction::zeros(4, 32, 2), one, one, 0.1, 1.0).value == 0.0);
  CHECK_THROWS_AS(count_rectangle(ones(4, 32), ones(4, 32), ones(4, 32), ones(4, 32), 0.1, 1.0), Error);
}

TEST_CASE("rectangle count is multilinear and Monte Carlo agrees") {
  const auto a = random_values(4, 12, 7, 2), b = random_values(4, 12, 8, 2),
             c = random_values(4, 12, 9, 2), e = random_values(4, 12, 10, 2);
  GridFunction mix = a;
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2 * a[i] + 0.5 * e[i];
  const auto o = with(CountMethod::Fft, 128);
  const double lhs = count_rectangle(b, c, mix, a, 0.25, 1.0, o).value;
  const double rhs = 2 * count_rectangle(b, c, a, a, 0.25, 1.0, o).value +
                     0.5 * count_rectangle(b, c, e, a, 0.25, 1.0, o).value;
  CHECK(std::abs(lhs - rhs) <= 1e-9);

  const auto A = make_grid_function(SetSpec::random(0.6, 1.0 / 8, 5, 4), 4, 16);
  GridFunction P = A;
  P.split = 2;
  const auto fft = count_rectangle(P, P, P, P, 0.25, 0.75);
  const auto mc = count_rectangle(P, P, P, P, 0.25, 0.75, with(CountMethod::MonteCarlo, 400000, 3));
  CHECK(std::abs(fft.value - mc.value) <= 4 * mc.error + fft.error + 1e-9);
}

TEST_CASE("products of simplices factor and reduce to rectangles") {
  const int n = 16;
  const auto seg1 = SimplexSpec::from_vertices({{1.0, 0.0}});
  const auto seg2 = SimplexSpec::from_vertices({{0.0, 0.5}});
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GridFunction> g, h;
  for (int i = 0; i < 2; ++i) {
    g.push_back(GridFunction::zeros(2, n));
    h.push_back(GridFunction::zeros(2, n));
    for (auto& x : g.back().v) x = u(rng);
    for (auto& x : h.back().v) x = u(rng);
  }
  std::vector<std::vector<GridFunction>> fs(2, std::vector<GridFunction>(2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) fs[i][j] = tensor(g[i], h[j]);
  const double lambda = 0.5;
  const auto prod = count_product_simplices(fs, seg1, seg2, lambda, with(CountMethod::Rotation, 12, 4));
  auto sq = [](GridFunction f) {
    for (auto& x : f.v) x *= x;
    return f;
  };
  const double t1 = count_simplex({sq(g[0]), sq(g[1])}, seg1, lambda, with(CountMethod::Rotation, 12, 4)).value;
  const double t2 = count_simplex({sq(h[0]), sq(h[1])}, seg2, lambda, with(CountMethod::Rotation, 12, 5)).value;
  CHECK(std::abs(prod.value - t1 * t2) <= 1e-9);

  // All ones: equals the rectangle count with c = |w|/|v| after rescaling.
  const int m = 32;
  const auto one = ones(4, m, 2);
  std::vector<std::vector<GridFunction>> os(2, std::vector<GridFunction>(2, one));
  const auto po = count_product_simplices(os, seg1, seg2, 0.25, with(CountMethod::Rotation, 48, 2));
  const auto ro = count_rectangle(one, one, one, one, 0.25, 0.5);
  CHECK(std::abs(po.value - ro.value) <= 3 * po.error + ro.error + 2.0 / (m * m));

  os[1][0] = GridFunction::zeros(4, m, 2);
  CHECK(count_product_simplices(os, seg1, seg2, 0.25, with(CountMethod::Rotation, 4)).value == 0.0);
  CHECK_THROWS_AS(count_product_simplices({{one, one}}, seg1, seg2, 0.25), Error);
}

TEST_CASE("relative weights") {
  const auto full = ones(2, 16);
  const auto w = make_relative_weights(full, full, 2, 3);
  for (double x : w.nu.v) CHECK(x == doctest::Approx(1.0));
  for (double x : w.nu_tilde.v) CHECK(x == doctest::Approx(1.0));

  const auto half = make_grid_function(SetSpec::box({0.25, 0.5}, {0.25, 0.5}), 2, 16);
  const auto v = make_relative_weights(half, full, 1, 1);
  CHECK(std::abs(density(v.nu1) - 1) <= 1e-12);
  CHECK(std::abs(density(v.nu2) - 1) <= 1e-12);
  for (double x : v.nu1.v) CHECK((x == 0.0 || x == 2.0));
  for (std::size_t i = 0; i < v.nu.size(); ++i) CHECK(v.nu[i] == doctest::Approx(v.nu_tilde[i]).epsilon(1e-15));
  CHECK_THROWS_AS(make_relative_weights(GridFunction::zeros(2, 16), full), Error);
}
