/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geodensity/error.hpp"
#include "geodensity/grid.hpp"

using namespace gd;

namespace {

// Random set expressions over boxes, halfspaces and random lattices.
SetSpec random_spec(std::mt19937_64& rng, int d, int depth) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int pick = static_cast<int>(rng() % (depth > 0 ? 6 : 3));
  std::vector<double> c(d), hw(d), nrm(d);
  for (int a = 0; a < d; ++a) {
    c[a] = u(rng);
    hw[a] = 0.05 + 0.4 * u(rng);
    nrm[a] = u(rng) - 0.5;
  }
  switch (pick) {
    case 0: return SetSpec::box(c, hw);
    case 1: return SetSpec::halfspace(nrm, 0.1 * (u(rng) - 0.5));
    case 2: return SetSpec::random(0.2 + 0.6 * u(rng), 1.0 / 8, rng(), d);
    case 3: return SetSpec::union_of({random_spec(rng, d, depth - 1), random_spec(rng, d, depth - 1)});
    case 4: return SetSpec::intersect({random_spec(rng, d, depth - 1), random_spec(rng, d, depth - 1)});
    default: return SetSpec::complement(random_spec(rng, d, depth - 1));
  }
}

GridFunction random_values(int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction f = GridFunction::zeros(d, n);
  for (auto& x : f.v) x = u(rng);
  return f;
}

} // namespace

TEST_CASE("full cube rasterizes to ones") {
  const auto f = make_grid_function(SetSpec::cube({0.5, 0.5}, 0.5), 2, 16);
  for (double x : f.v) CHECK(x == 1.0);
  CHECK(density(f) == 1.0);
}

TEST_CASE("ball area matches pi r^2") {
  const auto f = make_grid_function(SetSpec::ball({0.5, 0.5}, 0.25), 2, 128);
  CHECK(std::abs(density(f) - std::numbers::pi / 16) <= 2.0 / 128);
  for (double x : f.v) CHECK((x >= 0.0 && x <= 1.0));
}

TEST_CASE("random set density is within binomial spread") {
  const auto f = make_grid_function(SetSpec::random(0.3, 1.0 / 32, 7), 2, 64);
  const double sigma = std::sqrt(0.3 * 0.7 / (32.0 * 32.0));
  CHECK(std::abs(density(f) - 0.3) <= 3 * sigma);
  for (double x : f.v) CHECK((x == 0.0 || x == 1.0));
}

TEST_CASE("left half has density one half") {
  const auto f = make_grid_function(SetSpec::box({0.25, 0.5}, {0.25, 0.5}), 2, 32);
  CHECK(density(f) == 0.5);
  CHECK(density(GridFunction::zeros(2, 16)) == 0.0);
}

TEST_CASE("make_grid_function rejects coarse grids and bad dimensions") {
  try {
    make_grid_function(SetSpec::cube({0.5}, 0.5), 1, 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
  CHECK_THROWS_AS(make_grid_function(SetSpec::cube({0.5}, 0.5), 7, 8), Error);
}

TEST_CASE("complement density is one minus density on random expressions") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const int n = d == 3 ? 16 : 32;
    const SetSpec s = random_spec(rng, d, 2);
    const auto a = make_grid_function(s, d, n);
    const auto c = make_grid_function(SetSpec::complement(s), d, n);
    CHECK(std::abs(density(a) + density(c) - 1.0) <= 1e-12);
    for (double x : a.v) CHECK((x >= 0.0 && x <= 1.0));
  }
}

TEST_CASE("axis-aligned halfspace is exact") {
  // x_0 <= 0.3 on n = 10 cells: three full cells per row.
  const auto f = make_grid_function(SetSpec::halfspace({1.0, 0.0}, 0.3), 2, 10);
  CHECK(std::abs(density(f) - 0.3) <= 1e-14);
}

TEST_CASE("product sets are tensor products") {
  const SetSpec a = SetSpec::box({0.25, 0.5}, {0.25, 0.5});
  const SetSpec b = SetSpec::ball({0.5, 0.5}, 0.3);
  const auto p = make_grid_function(SetSpec::product(a, b), 4, 8);
  const auto t = tensor(make_grid_function(a, 2, 8), make_grid_function(b, 2, 8));
  CHECK(p.split == 2);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(t[i]).epsilon(1e-14));
}

TEST_CASE("balanced parts integrate to zero") {
  CHECK(density(balanced_part(GridFunction::constant(2, 16, 1.0))) == 0.0);
  const auto half = make_grid_function(SetSpec::box({0.25, 0.5}, {0.25, 0.5}), 2, 32);
  const auto f = balanced_part(half);
  for (double x : f.v) CHECK(std::abs(std::abs(x) - 0.5) <= 1e-15);

  const auto ball = make_grid_function(SetSpec::ball({0.5, 0.5}, 0.25), 2, 256);
  const auto mask = make_grid_function(SetSpec::cube({0.5, 0.5}, 0.4), 2, 256);
  const auto g = balanced_part(ball, mask);
  CHECK(std::abs(density(g)) <= 1e-12);
  const double alpha = density(ball) / density(mask);
  CHECK(alpha == doctest::Approx((std::numbers::pi / 16) / 0.64).epsilon(0.01));

  CHECK_THROWS_AS(balanced_part(mask, ball), Error);
  CHECK_THROWS_AS(balanced_part(ball, GridFunction::zeros(2, 256)), Error);
}

TEST_CASE("box_smooth of the full cube is one in the interior") {
  const int n = 64;
  const double L = 4.0 / n;
  const auto s = box_smooth(GridFunction::constant(2, n, 1.0), L);
  int idx[2];
  for (std::size_t i = 0; i < s.size(); ++i) {
    unflatten(i, 2, n, idx);
    const bool interior = idx[0] >= 5 && idx[0] < n - 5 && idx[1] >= 5 && idx[1] < n - 5;
    if (interior) CHECK(s[i] == doctest::Approx(1.0).epsilon(1e-13));
    else CHECK(s[i] < 1.0 + 1e-13);
  }
  CHECK_THROWS_AS(box_smooth(GridFunction::constant(2, n, 1.0), 0.5 / n), Error);
}

TEST_CASE("box_smooth of a single cell matches a direct tent convolution") {
  const int n = 32;
  const double h = 1.0 / n, L = 4 * h;
  GridFunction f = GridFunction::zeros(2, n);
  const int c[2] = {15, 16};
  f[flat_index(c, 2, n)] = 1.0;
  const auto s = box_smooth(f, L);
  // Oracle: cell-averaged tent mass by fine midpoint integration.
  auto weight = [&](int k) {
    const int sub = 2000;
    double acc = 0;
    for (int j = 0; j < sub; ++j) {
      const double z = (k - 0.5 + (j + 0.5) / sub) * h;
      acc += std::max(0.0, L - std::abs(z)) / (L * L);
    }
    return acc * h / sub;
  };
  double total = 0;
  int idx[2];
  for (std::size_t i = 0; i < s.size(); ++i) {
    unflatten(i, 2, n, idx);
    const double expect = weight(idx[0] - c[0]) * weight(idx[1] - c[1]);
    CHECK(std::abs(s[i] - expect) <= 1e-7);
    if (std::abs(idx[0] - c[0]) > 4 || std::abs(idx[1] - c[1]) > 4) CHECK(s[i] == 0.0);
    total += s[i];
  }
  CHECK(std::abs(total - 1.0) <= 1e-10);
}

TEST_CASE("box_smooth of the balanced left half is a linear-quadratic ramp") {
  const int n = 64;
  const double L = 1.0 / 8;
  const auto half = make_grid_function(SetSpec::box({0.25, 0.5}, {0.25, 0.5}), 2, n);
  const auto s = box_smooth(balanced_part(half), L);
  int idx[2];
  for (std::size_t i = 0; i < s.size(); ++i) {
    unflatten(i, 2, n, idx);
    if (idx[1] < 10 || idx[1] >= n - 10 || idx[0] < 10 || idx[0] >= n - 10) continue;
    // Value at the cell centre x: tent mass inside [0, 1/2] minus one half.
    const double x = (idx[0] + 0.5) / n;
    const double u = (0.5 - x) / L;
    double inside;
    if (u >= 1) inside = 1;
    else if (u <= -1) inside = 0;
    else inside = u >= 0 ? 1 - 0.5 * (1 - u) * (1 - u) : 0.5 * (1 + u) * (1 + u);
    CHECK(std::abs(s[i] - (inside - 0.5)) <= 1e-13);
  }
}

TEST_CASE("box_smooth commutes with whole-cell translation") {
  const int n = 32;
  GridFunction f = GridFunction::zeros(2, n), g = GridFunction::zeros(2, n);
  std::mt19937_64 rng(5);
  int idx[2];
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(i, 2, n, idx);
    if (idx[0] >= 8 && idx[0] < 20 && idx[1] >= 8 && idx[1] < 20) {
      f[i] = static_cast<double>(rng() % 1000) / 1000.0;
      const int sh[2] = {idx[0] + 3, idx[1] - 2};
      g[flat_index(sh, 2, n)] = f[i];
    }
  }
  const auto sf = box_smooth(f, 3.0 / n), sg = box_smooth(g, 3.0 / n);
  for (std::size_t i = 0; i < sf.size(); ++i) {
    unflatten(i, 2, n, idx);
    const int sh[2] = {idx[0] + 3, idx[1] - 2};
    if (sh[0] < n && sh[1] >= 0) CHECK(std::abs(sg.at(sh) - sf[i]) <= 1e-14);
  }
}

TEST_CASE("correlation of the unit interval is a triangle") {
  const int n = 16;
  const auto cf = correlate(GridFunction::constant(1, n, 1.0), GridFunction::constant(1, n, 1.0));
  for (int k = -(n - 1); k <= n - 1; ++k) CHECK(cf.at(&k) == doctest::Approx(1.0 - std::abs(k) / 16.0).epsilon(1e-12));
  for (double z : {0.03, 0.37, -0.81}) CHECK(cf.interpolate(&z) == doctest::Approx(1 - std::abs(z)).epsilon(1e-12));
  const int out = n + 3;
  CHECK(cf.at(&out) == 0.0);
}

TEST_CASE("correlation at zero is the L2 mass") {
  const auto f = make_grid_function(SetSpec::ball({0.5, 0.5}, 0.25), 2, 128);
  const auto cf = correlate(f, f);
  const int zero[2] = {0, 0};
  double l2 = 0;
  for (double x : f.v) l2 += x * x;
  l2 *= f.cell_volume();
  CHECK(std::abs(cf.at(zero) - l2) <= 1e-12);
  CHECK(std::abs(cf.at(zero) - std::numbers::pi / 16) <= 2.0 / 128);
  for (double c : cf.values) CHECK(c <= cf.at(zero) + 1e-12);
}

TEST_CASE("correlation matches brute-force summation") {
  const int n = 16;
  const auto f0 = make_grid_function(SetSpec::random(0.5, 1.0 / 16, 3), 2, n);
  const auto f1 = random_values(2, n, 8);
  const auto cf = correlate(f0, f1);
  const double h2 = 1.0 / (n * n);
  for (int k0 = -(n - 1); k0 < n; ++k0)
    for (int k1 = -(n - 1); k1 < n; ++k1) {
      double s = 0;
      for (int x0 = 0; x0 < n; ++x0)
        for (int x1 = 0; x1 < n; ++x1) {
          const int y[2] = {x0 - k0, x1 - k1};
          const int x[2] = {x0, x1};
          s += f0.at(x) * f1.at(y);
        }
      const int k[2] = {k0, k1};
      CHECK(std::abs(cf.at(k) - s * h2) <= 1e-10 * std::max(1.0, std::abs(s * h2)));
    }
}

TEST_CASE("correlation is bilinear") {
  const int n = 12;
  const auto a = random_values(3, n, 1), b = random_values(3, n, 2), c = random_values(3, n, 3);
  GridFunction ab = a;
  for (std::size_t i = 0; i < ab.size(); ++i) ab[i] = 2 * a[i] - 0.5 * b[i];
  const auto lhs = correlate(ab, c);
  const auto ca = correlate(a, c), cb = correlate(b, c);
  for (std::size_t i = 0; i < lhs.values.size(); ++i)
    CHECK(std::abs(lhs.values[i] - (2 * ca.values[i] - 0.5 * cb.values[i])) <= 1e-13);
}

TEST_CASE("restrict_to_box rescales a window") {
  const auto f = make_grid_function(SetSpec::box({0.25, 0.5}, {0.25, 0.5}), 2, 32);
  const auto g = restrict_to_box(f, {8, 0}, 16);
  CHECK(g.n == 16);
  CHECK(density(g) == 0.5);
}
