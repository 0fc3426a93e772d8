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
#include "geodensity/kernels.hpp"
#include "geodensity/norms.hpp"
#include "geodensity/vonneumann.hpp"

using namespace gd;

namespace {

GridFunction random_set(int d, int n, double p, double cell, std::uint64_t seed) {
  return make_grid_function(SetSpec::random(p, cell, seed), d, n);
}

GridFunction random_values(int d, int n, std::uint64_t seed, int split = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction f = GridFunction::zeros(d, n, split);
  for (auto& x : f.v) x = u(rng);
  return f;
}

void require_exact(const InequalityReport& r) {
  for (const auto& s : r.exact_steps) {
    INFO(r.check << " step " << s.name << ": " << s.lhs << " vs " << s.rhs);
    CHECK(s.ok);
  }
}

GvnOptions seeded(std::uint64_t seed, int budget = 0, bool fourier = true) {
  GvnOptions o;
  o.seed = seed;
  o.budget = budget;
  o.fourier_steps = fourier;
  return o;
}

} // namespace

TEST_CASE("distance check on a random set holds with exact intermediates") {
  const auto A = balanced_part(random_set(2, 64, 0.5, 1.0 / 32, 5));
  const auto r = check_gvn_distance(A, A, 0.25, 0.25, 1.0);
  CHECK(r.verdict == Verdict::Holds);
  CHECK(r.exact_steps.size() == 3);
  require_exact(r);
  CHECK(r.inputs.count("K") == 1);
  CHECK(r.inputs.count("c") == 1);
  CHECK(r.inputs.count("eps") == 1);
  CHECK(r.slack == doctest::Approx(r.rhs_main + r.rhs_error - r.lhs));
}

TEST_CASE("distance check with a zero slot has slack equal to the rhs") {
  const auto A = random_set(2, 32, 0.5, 1.0 / 16, 2);
  const auto r = check_gvn_distance(GridFunction::zeros(2, 32), A, 0.25, 0.25, 1.0);
  CHECK(r.lhs == 0.0);
  CHECK(r.slack == doctest::Approx(r.rhs_main + r.rhs_error));
  CHECK(r.verdict == Verdict::Holds);
}

TEST_CASE("distance check on the left half") {
  const auto A = balanced_part(make_grid_function(SetSpec::halfspace({1, 0}, 0.5), 2, 64));
  const auto r = check_gvn_distance(A, A, 0.5, 0.5, 1.0);
  CHECK(r.inputs.at("u1_f0") == doctest::Approx(0.5).epsilon(0.1));
  CHECK(r.lhs < r.rhs_main + r.rhs_error);
  require_exact(r);
}

TEST_CASE("distance check preconditions") {
  const auto A = random_set(2, 16, 0.5, 1.0 / 16, 1);
  auto big = A;
  big[3] = 1.5;
  CHECK_THROWS_AS(check_gvn_distance(big, A, 0.25, 0.25, 1.0), Error);
  try {
    check_gvn_distance(A, A, 0.25, 0.25, 0.1);
    FAIL("expected a resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
  CHECK_THROWS_AS(check_gvn_distance(A, A, 0.25, 0.0, 1.0), Error);
}

TEST_CASE("distance exact steps hold on signed random inputs") {
  for (std::uint64_t s = 1; s <= 6; ++s) {
    const int d = s % 2 ? 2 : 3, n = d == 2 ? 32 : 16;
    const auto f0 = random_values(d, n, s), f1 = random_values(d, n, s + 100);
    const auto r = check_gvn_distance(f0, f1, 0.3, 0.5, 0.8, seeded(s));
    require_exact(r);
  }
}

TEST_CASE("simplex check: zero slot, random set, uniform slots") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto A = random_set(3, 24, 0.5, 1.0 / 12, 3);
  const auto Z = GridFunction::zeros(3, 24);
  const auto z = check_gvn_simplex({A, Z, A}, tri, 0.25, 0.25, SimplexVariant::Direct, seeded(1, 256));
  CHECK(z.lhs == 0.0);
  CHECK(z.verdict == Verdict::Holds);

  const auto fA = balanced_part(A);
  for (auto v : {SimplexVariant::Direct, SimplexVariant::Squared}) {
    const auto r = check_gvn_simplex({fA, fA, fA}, tri, 0.25, 0.25, v, seeded(2, 256));
    CHECK(r.verdict != Verdict::Violated);
    CHECK(r.argmin_slot >= 0);
    CHECK(r.argmin_slot <= 2);
    CHECK(r.numeric_error > 0);
    require_exact(r);
  }
  auto names = check_gvn_simplex({A, A, A}, tri, 0.25, 0.25, SimplexVariant::Squared, seeded(2, 256));
  bool pairs = false;
  for (const auto& s : names.exact_steps) pairs |= s.name == "vertex_pairs";
  CHECK(pairs);

  const auto full = GridFunction::constant(3, 24, 1.0);
  const auto zero = balanced_part(full);
  const auto u = check_gvn_simplex({zero, zero, zero}, tri, 0.25, 0.25, SimplexVariant::Direct, seeded(3, 256));
  CHECK(u.lhs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(u.rhs_main == doctest::Approx(0.0).epsilon(1e-12));
  const auto one = check_gvn_simplex({full, full, full}, tri, 0.25, 0.25, SimplexVariant::Direct, seeded(3, 256));
  CHECK(one.verdict == Verdict::Holds);
}

TEST_CASE("simplex argmin points at the least uniform slot") {
  const auto seg = SimplexSpec::equilateral(1, 1.0);
  const auto A = random_set(2, 32, 0.5, 1.0 / 32, 4);
  auto small = A;
  for (auto& x : small.v) x *= 0.1;
  const auto r = check_gvn_simplex({A, small}, seg, 0.25, 0.25, SimplexVariant::Direct, seeded(1, 64));
  CHECK(r.argmin_slot == 1);
  CHECK(r.rhs_main == doctest::Approx(r.inputs.at("u1_f1")));
}

TEST_CASE("simplex check preconditions") {
  const auto A = random_set(2, 32, 0.5, 1.0 / 16, 1);
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  CHECK_THROWS_AS(check_gvn_simplex({A, A, A}, tri, 0.25, 0.25, SimplexVariant::Direct), Error);
  CHECK_THROWS_AS(check_gvn_simplex({A, A}, tri, 0.25, 0.25, SimplexVariant::Direct), Error);
  CHECK_THROWS_AS(SimplexSpec::from_vertices({{1, 0, 0}, {2, 0, 0}}), Error);
}

TEST_CASE("simplex exact steps hold on signed random inputs") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto seg = SimplexSpec::equilateral(1, 0.8);
  for (std::uint64_t s = 1; s <= 4; ++s) {
    const auto f = random_values(3, 16, s);
    const auto g = random_values(3, 16, s + 7);
    const auto v = s % 2 ? SimplexVariant::Direct : SimplexVariant::Squared;
    require_exact(check_gvn_simplex({f, g, f}, tri, 0.3, 0.5, v, seeded(s, 128)));
    require_exact(check_gvn_simplex({f, g}, seg, 0.3, 0.5, v, seeded(s, 64)));
  }
}

TEST_CASE("halving eps never turns a holding verdict into a violation") {
  const auto A = random_set(2, 64, 0.5, 1.0 / 32, 9);
  const auto seg = SimplexSpec::equilateral(1, 1.0);
  for (double eps : {0.5, 0.25, 0.125}) {
    const auto r = check_gvn_distance(A, A, 0.25, eps, 1.0);
    const auto r2 = check_gvn_distance(A, A, 0.25, eps / 2, 1.0);
    CHECK(r2.rhs_error < r.rhs_error);
    if (r.verdict == Verdict::Holds) CHECK(r2.verdict != Verdict::Violated);
    const auto s = check_gvn_simplex({A, A}, seg, 0.25, eps, SimplexVariant::Direct, seeded(1, 64));
    const auto s2 = check_gvn_simplex({A, A}, seg, 0.25, eps / 2, SimplexVariant::Direct, seeded(1, 64));
    if (s.verdict == Verdict::Holds) CHECK(s2.verdict != Verdict::Violated);
  }
}

TEST_CASE("reports are deterministic per seed") {
  const auto A = random_set(3, 16, 0.5, 1.0 / 8, 6);
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto a = check_gvn_simplex({A, A, A}, tri, 0.3, 0.25, SimplexVariant::Squared, seeded(11, 128));
  const auto b = check_gvn_simplex({A, A, A}, tri, 0.3, 0.25, SimplexVariant::Squared, seeded(11, 128));
  CHECK(a.lhs == b.lhs);
  CHECK(a.numeric_error == b.numeric_error);
  CHECK(a.inputs == b.inputs);
  const auto c = check_gvn_distance(A, A, 0.3, 0.25, 1.0, seeded(4));
  const auto e = check_gvn_distance(A, A, 0.3, 0.25, 1.0, seeded(4));
  CHECK(c.lhs == e.lhs);
  CHECK(c.slack == e.slack);
}

TEST_CASE("angular decomposition: chords and quadrature agreement") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto s = tri.embedded(3);
  // Rotating v_2 about the line through v_1 by pi reflects it across that line.
  const Eigen::VectorXd v0 = rotated_vertex(tri, 3, 0.0);
  CHECK((v0 - s.v[1]).norm() == doctest::Approx(0.0).epsilon(1e-12));
  const Eigen::VectorXd vpi = rotated_vertex(tri, 3, std::numbers::pi);
  CHECK((vpi - s.v[1]).norm() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK((vpi - s.v[0]).norm() == doctest::Approx(1.0).epsilon(1e-12));

  const auto seg = SimplexSpec::equilateral(1, 1.0);
  const auto r = check_angular_decomposition(seg, 3, 64, 100000, 5);
  CHECK(r.max_rel_error <= 0.02);
  CHECK(r.max_chord_error <= 1e-10);
  CHECK(r.passed);

  const auto r4 = check_angular_decomposition(tri, 5, 32, 20000, 6, 10);
  CHECK(r4.passed);
  CHECK_THROWS_AS(check_angular_decomposition(tri, 2, 32, 1000, 1), Error);
}

TEST_CASE("rectangle check: zeros, random product set, exact steps") {
  const int n = 16;
  const auto full = GridFunction::constant(2, n, 1.0);
  const auto Z = GridFunction::zeros(4, n, 2);
  const auto z = check_gvn_rectangle({Z, Z, Z, Z}, full, full, 0.25, 0.25, 1.0, seeded(1, 64));
  CHECK(z.lhs == 0.0);
  CHECK(z.verdict == Verdict::Holds);

  auto A = tensor(random_set(2, n, 0.5, 1.0 / 8, 1), random_set(2, n, 0.5, 1.0 / 8, 2));
  std::mt19937_64 rng(3);
  for (auto& x : A.v)
    if (rng() % 10 == 0) x = 1 - x;
  const auto r = check_gvn_rectangle({A, A, A, A}, full, full, 0.25, 0.25, 1.0, seeded(2, 64));
  CHECK(r.verdict == Verdict::Holds);
  require_exact(r);
  CHECK(r.inputs.at("beta1") == 1.0);
  CHECK(r.inputs.count("B1_defect") == 1);
  CHECK(r.inputs.count("rhs_error_alt") == 1);

  const auto B1 = random_set(2, n, 0.6, 1.0 / 8, 4);
  const auto f = random_values(4, n, 5, 2);
  const auto g = random_values(4, n, 6, 2);
  const auto q = check_gvn_rectangle({f, g, g, f}, B1, full, 0.3, 0.5, 0.7, seeded(3, 48));
  require_exact(q);
  CHECK_THROWS_AS(check_gvn_rectangle({f, g, g, f}, GridFunction::zeros(2, n), full, 0.3, 0.5, 0.7),
                  Error);
}

TEST_CASE("factorized rectangle slots give a product of distance forms") {
  const int n = 16;
  const auto full = GridFunction::constant(2, n, 1.0);
  const auto g0 = random_values(2, n, 1), g1 = random_values(2, n, 2);
  const auto k0 = random_values(2, n, 3), k1 = random_values(2, n, 4);
  const double lambda = 0.3, c = 0.8;
  const auto r = check_gvn_rectangle({tensor(g0, k0), tensor(g1, k0), tensor(g0, k1), tensor(g1, k1)},
                                     full, full, lambda, 0.5, c, seeded(7, 40));
  const auto P1 = sphere_kernel(2, lambda, 1.0 / n, 40, 7, KernelMode::Nearest);
  const auto P2 = sphere_kernel(2, c * lambda, 1.0 / n, 40, 8, KernelMode::Nearest);
  // Each factor enters twice: f00 f10 f01 f11 = g0^2 g1(.-s)^2 k0^2 k1(.-t)^2.
  const double expect = kernel_pair_direct(pointwise(g0, g0), pointwise(g1, g1), P1) *
                        kernel_pair_direct(pointwise(k0, k0), pointwise(k1, k1), P2);
  CHECK(r.inputs.at("count") == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("relative simplex with B the full cube reduces to the plain check") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto A = random_set(3, 16, 0.5, 1.0 / 8, 2);
  const auto full = GridFunction::constant(3, 16, 1.0);
  const auto p = check_gvn_simplex({A, A, A}, tri, 0.3, 0.25, SimplexVariant::Direct, seeded(5, 128));
  const auto r = check_gvn_relative_simplex({A, A, A}, tri, full, 0.3, 0.25, seeded(5, 128));
  CHECK(r.inputs.at("count") == doctest::Approx(p.inputs.at("count")).epsilon(1e-9));
  CHECK(r.lhs == doctest::Approx(p.lhs * p.lhs).epsilon(1e-9));
  CHECK(r.inputs.at("beta") == 1.0);
  CHECK(r.inputs.at("dimension_ok") == 0.0);
  require_exact(r);
}

TEST_CASE("relative simplex on a random B") {
  const auto seg = SimplexSpec::equilateral(1, 1.0);
  const auto B = random_set(4, 16, 0.4, 1.0 / 8, 3);
  const auto A = pointwise(B, random_set(4, 16, 0.5, 1.0 / 8, 4));
  const auto r = check_gvn_relative_simplex({A, A}, seg, B, 0.25, 0.25, seeded(1, 64));
  CHECK(r.verdict != Verdict::Violated);
  CHECK(r.inputs.at("dimension_ok") == 1.0);
  CHECK(r.inputs.count("B_defect") == 1);
  require_exact(r);
  CHECK_THROWS_AS(check_gvn_relative_simplex({A, A}, seg, GridFunction::zeros(4, 16), 0.25, 0.25), Error);
}

TEST_CASE("telescoping audit on a five-dimensional grid") {
  const auto tri = SimplexSpec::equilateral(2, 1.0);
  const auto B = random_set(5, 16, 0.5, 1.0 / 4, 8);
  const auto f = random_values(5, 16, 9);
  const auto r = check_gvn_relative_simplex({f, f, f}, tri, B, 0.25, 0.25, seeded(3, 256, false));
  bool seen = false;
  for (const auto& s : r.exact_steps)
    if (s.name == "telescoping") {
      seen = true;
      CHECK(std::abs(s.lhs - s.rhs) <= 1e-8 * std::max(1.0, std::abs(s.rhs)));
    }
  CHECK(seen);
  require_exact(r);
  CHECK(r.inputs.count("E_0") == 1);
  CHECK(r.inputs.count("E_1") == 1);
}
