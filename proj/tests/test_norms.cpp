/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "geodensity/error.hpp"
#include "geodensity/norms.hpp"

using namespace gd;

namespace {

GridFunction random_values(int d, int n, std::uint64_t seed, int split = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction f = GridFunction::zeros(d, n, split);
  for (auto& x : f.v) x = u(rng);
  return f;
}

// Length of [lo, hi] cap [j, j+1].
double overlap(int j, double lo, double hi) {
  return std::max(0.0, std::min<double>(j + 1, hi) - std::max<double>(j, lo));
}

// Window mean of f at centre u (cell units) by direct summation.
double window_mean(const GridFunction& f, int m, const std::vector<double>& u) {
  const int d = f.d, n = f.n;
  std::vector<int> lo(d), hi(d);
  for (int a = 0; a < d; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor(u[a] - 0.5 * m)));
    hi[a] = std::min(n, static_cast<int>(std::ceil(u[a] + 0.5 * m)));
    if (hi[a] <= lo[a]) return 0;
  }
  std::vector<int> idx = lo;
  double acc = 0;
  while (true) {
    double w = 1;
    for (int a = 0; a < d; ++a) w *= overlap(idx[a], u[a] - 0.5 * m, u[a] + 0.5 * m);
    acc += w * f.at(idx.data());
    int a = d - 1;
    while (a >= 0 && ++idx[a] == hi[a]) idx[a--] = lo[a];
    if (a < 0) break;
  }
  return acc / std::pow(m, d);
}

// Average of g over [a,b]^d using two-point Gauss-Legendre on every interval
// between consecutive points of Z + m/2.  Exact for g piecewise bicubic.
double gauss_average(int d, int m, double a, double b, const std::function<double(const std::vector<double>&)>& g) {
  std::vector<double> br{a};
  for (double u = std::floor(a - 0.5 * m) + 0.5 * m; u < b; u += 1)
    if (u > a) br.push_back(u);
  br.push_back(b);
  std::vector<double> x, w;
  const double r = 0.5 / std::sqrt(3.0);
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double mid = 0.5 * (br[i] + br[i + 1]), len = br[i + 1] - br[i];
    x.push_back(mid - r * len);
    x.push_back(mid + r * len);
    w.push_back(0.5 * len);
    w.push_back(0.5 * len);
  }
  const std::size_t T = x.size();
  std::vector<int> idx(d, 0);
  std::vector<double> u(d);
  double acc = 0;
  while (true) {
    double wt = 1;
    for (int k = 0; k < d; ++k) {
      u[k] = x[idx[k]];
      wt *= w[idx[k]];
    }
    acc += wt * g(u);
    int k = d - 1;
    while (k >= 0 && ++idx[k] == static_cast<int>(T)) idx[k--] = 0;
    if (k < 0) break;
  }
  return acc / std::pow(b - a, d);
}

double brute_u1(const GridFunction& f, double L) {
  const int m = static_cast<int>(std::lround(L * f.n));
  return std::sqrt(gauss_average(f.d, m, 0, f.n, [&](const std::vector<double>& u) {
    const double v = window_mean(f, m, u);
    return v * v;
  }));
}

// Piecewise-linear 1-D profiles for the closed forms below (u in [0,1]).
// Window coverage of [0,1] and of [0,1/2] by t + [-L/2, L/2].
double cover_unit(double u, double L) {
  return (std::min(1.0, u + L / 2) - std::max(0.0, u - L / 2)) / L;
}
double cover_half(double u, double L) {
  return std::max(0.0, std::min(0.5, u + L / 2) - std::max(0.0, u - L / 2)) / L;
}

// Integral over [0,1] of a piecewise polynomial with kinks at `kinks`, by
// 5-point Gauss-Legendre on each piece.
double integrate01(const std::function<double(double)>& g, std::vector<double> kinks) {
  static const double x5[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
  static const double w5[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  kinks.push_back(0);
  kinks.push_back(1);
  std::sort(kinks.begin(), kinks.end());
  double acc = 0;
  for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
    const double a = kinks[i], b = kinks[i + 1];
    if (b <= a) continue;
    for (int k = 0; k < 5; ++k) acc += 0.5 * (b - a) * w5[k] * g(0.5 * (a + b) + 0.5 * (b - a) * x5[k]);
  }
  return acc;
}

GridFunction left_half(int d, int n, int split = 0) {
  GridFunction f = make_grid_function(SetSpec::halfspace({1.0, 0.0}, 0.5), d, n);
  f.split = split;
  return f;
}

} // namespace

TEST_CASE("u1 norm of zero is zero") {
  CHECK(u1_norm(GridFunction::zeros(2, 32), 1.0 / 8) == 0.0);
}

TEST_CASE("u1 norm matches window sums integrated by Gauss-Legendre") {
  for (auto [d, n, L, seed] : {std::tuple{1, 40, 0.125, 1}, std::tuple{2, 16, 0.25, 2},
                               std::tuple{2, 20, 0.15, 3}, std::tuple{3, 12, 0.25, 4}}) {
    const GridFunction f = random_values(d, n, seed);
    const double exact = u1_norm(f, L);
    CHECK(exact == doctest::Approx(brute_u1(f, L)).epsilon(1e-10));
  }
}

TEST_CASE("u1 norm of a random balanced set matches brute force at n = 64") {
  const GridFunction A = make_grid_function(SetSpec::random(0.5, 1.0 / 64, 7), 2, 64);
  const GridFunction f = balanced_part(A);
  const double v = u1_norm(f, 1.0 / 8);
  CHECK(v == doctest::Approx(brute_u1(f, 1.0 / 8)).epsilon(1e-10));
  CHECK(v <= 3.0);
  CHECK(v < 0.15);
}

TEST_CASE("u1 norm of the balanced left half") {
  const double L = 1.0 / 16;
  const GridFunction f = balanced_part(left_half(2, 64));
  // f = +-1/2 on the two halves; window mean factors as s(t1) c(t2).
  auto s = [&](double u) { return cover_half(u, L) - 0.5 * cover_unit(u, L); };
  const std::vector<double> k{L / 2, 0.5 - L / 2, 0.5 + L / 2, 1 - L / 2};
  const double s2 = integrate01([&](double u) { return s(u) * s(u); }, k);
  const double c2 = integrate01([&](double u) { return cover_unit(u, L) * cover_unit(u, L); }, k);
  const double v = u1_norm(f, L);
  CHECK(v == doctest::Approx(std::sqrt(s2 * c2)).epsilon(1e-10));
  CHECK(std::abs(v - 0.5) <= 0.05);
}

TEST_CASE("u1 norm is bounded by the sup norm") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const int n = d == 3 ? 8 + static_cast<int>(rng() % 5) : 16 + static_cast<int>(rng() % 24);
    const int m = 1 + static_cast<int>(rng() % std::max(1, n / 4));
    GridFunction f = random_values(d, n, rng());
    const double amp = 0.1 + static_cast<double>(rng() % 100) / 50;
    for (auto& x : f.v) x *= amp;
    double sup = 0;
    for (double x : f.v) sup = std::max(sup, std::abs(x));
    CHECK(u1_norm(f, static_cast<double>(m) / n) <= sup + 1e-12);
  }
}

TEST_CASE("psi form tracks the squared u1 norm up to O(L)") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const GridFunction A = make_grid_function(SetSpec::random(0.4, 1.0 / 16, seed), 2, 64);
    const GridFunction f = balanced_part(A);
    for (double L : {1.0 / 32, 1.0 / 16, 1.0 / 8}) {
      const double u = u1_norm(f, L);
      CHECK(std::abs(psi_form(f, f, L) - u * u) <= 2 * L);
    }
  }
  const GridFunction g = balanced_part(left_half(2, 64));
  const double u = u1_norm(g, 1.0 / 16);
  CHECK(std::abs(psi_form(g, g, 1.0 / 16) - u * u) <= 2.0 / 16);
}

TEST_CASE("uniformity defect of the full cube is the boundary term") {
  for (auto [d, n, L] : {std::tuple{2, 64, 1.0 / 16}, std::tuple{3, 32, 1.0 / 8}}) {
    const GridFunction A = GridFunction::constant(d, n, 1.0);
    const auto r = uniformity_defect(A, L);
    // Coverage c(u) per axis: integral of c is 1 - L/4, of c^2 is 1 - 5L/12.
    const double I1 = 1 - L / 4, I2 = 1 - 5 * L / 12;
    const double eps2 = std::pow(I2, d) - 2 * std::pow(I1, d) + 1;
    CHECK(r.eps_min == doctest::Approx(std::sqrt(eps2)).epsilon(1e-9));
    CHECK(r.eps_min <= std::sqrt(d * L));
    CHECK(r.norm == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.density == doctest::Approx(1.0));
  }
  // On a window the full cube has no defect at all.
  const GridFunction A = GridFunction::constant(2, 32, 1.0);
  const auto w = uniformity_defect(A, 1.0 / 8, CubeWindow{{8, 8}, 16});
  CHECK(w.eps_min == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w.bad_mass == 0.0);
}

TEST_CASE("uniformity defect of the left half matches the 1-D closed form") {
  const double L = 1.0 / 16;
  const auto r = uniformity_defect(left_half(2, 64), L);
  const std::vector<double> k{L / 2, 0.5 - L / 2, 0.5 + L / 2, 1 - L / 2};
  auto g = [&](double u) { return cover_half(u, L); };
  auto c = [&](double u) { return cover_unit(u, L); };
  const double g2 = integrate01([&](double u) { return g(u) * g(u); }, k);
  const double g1 = integrate01(g, k);
  const double c2 = integrate01([&](double u) { return c(u) * c(u); }, k);
  const double c1 = integrate01(c, k);
  const double eps2 = g2 * c2 - g1 * c1 + 0.25;
  CHECK(r.eps_min == doctest::Approx(std::sqrt(eps2)).epsilon(1e-9));
  CHECK(r.density == doctest::Approx(0.5));
  // About half the windows see no point of A.
  CHECK(r.bad_mass > 0.4);
  CHECK(r.bad_mass < 0.6);
}

TEST_CASE("uniformity defect of a random set matches the binomial variance") {
  const double p = 0.3, L = 1.0 / 8;
  const GridFunction A = make_grid_function(SetSpec::random(p, 1.0 / 64, 9), 2, 256);
  const auto r = uniformity_defect(A, L, CubeWindow{{0, 0}, 256});
  // A window covers L/cellsize = 8 random cells per axis at a uniform offset;
  // the mean of sum(overlap^2) per axis is 7 + 2/3.
  const double per_axis = (7 + 2.0 / 3) / 64;
  const double oracle = std::sqrt(p * (1 - p) * per_axis * per_axis);
  CHECK(r.eps_min > 0.8 * oracle);
  CHECK(r.eps_min < 1.2 * oracle);
}

TEST_CASE("u1 norm of the balanced part is at most 2 eps + 4L") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 12; ++trial) {
    const double p = 0.2 + 0.6 * static_cast<double>(rng() % 100) / 100;
    const double cell = 1.0 / (8 << (rng() % 3));
    const GridFunction A = make_grid_function(SetSpec::random(p, cell, rng()), 2, 64);
    if (density(A) == 0) continue;
    for (double L : {1.0 / 32, 1.0 / 16}) {
      const auto r = uniformity_defect(A, L);
      CHECK(u1_norm(balanced_part(A), L) <= 2 * r.eps_min + 4 * L);
    }
  }
}

TEST_CASE("uniformity defect rejects empty sets and oversized scales") {
  CHECK_THROWS_AS(uniformity_defect(GridFunction::zeros(2, 16), 0.25), Error);
  const GridFunction A = GridFunction::constant(2, 16, 1.0);
  CHECK_THROWS_AS(uniformity_defect(A, 0.5, CubeWindow{{0, 0}, 4}), Error);
  try {
    u1_norm(A, 1.0 / 64);
    FAIL("expected a resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
}

namespace {

// Fourth power of the windowed box norm by the quadruple sum.
double brute_window4(const GridFunction& f, int m, const std::vector<int>& c1,
                     const std::vector<int>& c2) {
  const int d1 = f.d1(), d2 = f.d2();
  const std::size_t N1 = ipow(m, d1), N2 = ipow(m, d2);
  auto val = [&](std::size_t x, std::size_t y) {
    int idx[kMaxDim];
    unflatten(x, d1, m, idx);
    unflatten(y, d2, m, idx + d1);
    for (int a = 0; a < d1; ++a) idx[a] += c1[a];
    for (int a = 0; a < d2; ++a) idx[d1 + a] += c2[a];
    return f.at(idx);
  };
  double acc = 0;
  for (std::size_t x = 0; x < N1; ++x)
    for (std::size_t xp = 0; xp < N1; ++xp)
      for (std::size_t y = 0; y < N2; ++y)
        for (std::size_t yp = 0; yp < N2; ++yp)
          acc += val(x, y) * val(xp, y) * val(x, yp) * val(xp, yp);
  const double N = static_cast<double>(N1 * N2);
  return acc / (N * N);
}

// Trapezoid weights over window corners k with centre (k + m/2)/n in [0,1].
std::vector<std::pair<int, double>> corner_weights(int n, int m) {
  std::vector<std::pair<int, double>> out;
  const double lo = -0.5 * m, hi = n - 0.5 * m;
  const int k0 = static_cast<int>(std::ceil(lo)), k1 = static_cast<int>(std::floor(hi));
  for (int k = k0; k <= k1; ++k) {
    double w = 0;
    if (k > k0) w += 0.5;
    else w += k0 - lo;
    if (k < k1) w += 0.5;
    else w += hi - k1;
    out.push_back({k, w / n});
  }
  return out;
}

} // namespace

TEST_CASE("windowed box norm matches the quadruple sum") {
  for (auto [d, split, n, m] : {std::tuple{2, 1, 16, 4}, std::tuple{3, 2, 8, 3}, std::tuple{3, 1, 8, 2}}) {
    const GridFunction f = random_values(d, n, 17 + d + split, split);
    std::mt19937_64 rng(n + m);
    for (int trial = 0; trial < 6; ++trial) {
      std::vector<int> c1(split), c2(d - split);
      for (auto& c : c1) c = static_cast<int>(rng() % (n + m)) - m;
      for (auto& c : c2) c = static_cast<int>(rng() % (n + m)) - m;
      const double ref = brute_window4(f, m, c1, c2);
      CHECK(box_norm_window4(f, m, c1, c2) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(ref >= 0);
    }
  }
}

TEST_CASE("box norm field agrees with single windows") {
  const GridFunction f = random_values(3, 12, 23, 1);
  const BoxField b = box_norm_field(f, 0.25, 1);
  CHECK(b.m == 3);
  CHECK(b.value4.size() == b.corners1.size() * b.corners2.size());
  double w1 = 0, w2 = 0;
  for (double w : b.weights1) w1 += w;
  for (double w : b.weights2) w2 += w;
  CHECK(w1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w2 == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < b.corners1.size(); i += 3)
    for (std::size_t j = 0; j < b.corners2.size(); j += 7)
      CHECK(b.value4[i * b.corners2.size() + j] ==
            doctest::Approx(box_norm_window4(f, 3, b.corners1[i], b.corners2[j])).epsilon(1e-11));
}

TEST_CASE("box norm of zero is zero and non-product grids are rejected") {
  CHECK(box_norm(GridFunction::zeros(2, 16, 1), 0.25).value == 0.0);
  CHECK_THROWS_AS(box_norm(GridFunction::zeros(2, 16), 0.25), Error);
}

TEST_CASE("box norm of a tensor product factors") {
  // f(x,y) = s(x) s(y), s the balanced left half of [0,1]^2, n = 32.
  const int n = 32, m = 2;
  const double L = static_cast<double>(m) / n;
  const GridFunction s = balanced_part(left_half(2, n));
  const GridFunction f = tensor(s, s);
  const BoxNorm b = box_norm(f, L, 1);
  // Per window the norm^4 is (mean of s^2 over w1)^2 (mean of s^2 over w2)^2.
  const auto cw = corner_weights(n, m);
  double factor = 0;
  for (auto [k0, w0] : cw)
    for (auto [k1, w1] : cw) {
      double acc = 0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const int idx[2] = {k0 + i, k1 + j};
          acc += s.at(idx) * s.at(idx);
        }
      acc /= m * m;
      factor += w0 * w1 * acc * acc;
    }
  CHECK(b.fourth == doctest::Approx(factor * factor).epsilon(1e-9));
  CHECK(b.value == doctest::Approx(0.244141).epsilon(1e-5));  // frozen regression value
  CHECK(b.value > 0.2);
  CHECK(b.value < 0.5);
}

TEST_CASE("box norm fourth power tracks the psi form within 0.15") {
  const int n = 32;
  const double L = 1.0 / 8;
  const GridFunction s = balanced_part(left_half(2, n));
  const GridFunction t = tensor(s, s);
  CHECK(std::abs(box_norm(t, L, 1).fourth - box_psi_form(t, L)) <= 0.15);
  GridFunction A = make_grid_function(SetSpec::random(0.5, 1.0 / 8, 3), 4, n);
  A.split = 2;
  const GridFunction f = balanced_part(A);
  const double b4 = box_norm(f, L, 1).fourth, p4 = box_psi_form(f, L);
  CHECK(std::abs(b4 - p4) <= 0.15);
  CHECK(p4 >= -1e-12);
}

TEST_CASE("coarse box norm stride stays close to the full lattice") {
  GridFunction A = make_grid_function(SetSpec::random(0.5, 1.0 / 8, 21), 4, 24);
  A.split = 2;
  const GridFunction f = balanced_part(A);
  const double L = 1.0 / 6;
  const double full = box_norm(f, L, 1).value, coarse = box_norm(f, L).value;
  CHECK(std::abs(full - coarse) <= 0.05 * full + 1e-3);
}
