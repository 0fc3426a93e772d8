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
#include "geodensity/measures.hpp"

using namespace gd;

namespace {

double moment(const Quadrature& q, int a, int b) {
  double s = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double* x = q.node(i);
    s += q.weights[i] * x[a] * (b < 0 ? 1.0 : x[b]);
  }
  return s;
}

// Closed form of the normalized sphere transform in R^d:
// Gamma(d/2) (pi rho)^{1-d/2} J_{d/2-1}(2 pi rho).
double sphere_fourier_oracle(int d, double rho) {
  const double nu = 0.5 * d - 1;
  return std::tgamma(0.5 * d) * std::pow(std::numbers::pi * rho, -nu) *
         std::cyl_bessel_j(nu, 2 * std::numbers::pi * rho);
}

} // namespace

TEST_CASE("sphere quadrature weights sum to one and nodes lie on the sphere") {
  for (int d = 2; d <= 6; ++d) {
    const std::vector<double> c(d, 0.3);
    const auto q = sphere_quadrature(d, 0.7, c, 512, 9);
    double w = 0;
    for (double x : q.weights) {
      CHECK(x >= 0);
      w += x;
    }
    CHECK(std::abs(w - 1) <= 1e-12);
    for (std::size_t i = 0; i < q.size(); ++i) {
      double r2 = 0;
      for (int a = 0; a < d; ++a) r2 += (q.node(i)[a] - 0.3) * (q.node(i)[a] - 0.3);
      CHECK(std::abs(std::sqrt(r2) - 0.7) <= 1e-12);
    }
  }
}

TEST_CASE("sphere quadrature low moments") {
  const auto q2 = sphere_quadrature(2, 1.0, {}, 256);
  CHECK(std::abs(moment(q2, 0, -1)) <= 1e-14);
  CHECK(std::abs(moment(q2, 0, 1)) <= 1e-14);
  CHECK(moment(q2, 0, 0) == doctest::Approx(0.5).epsilon(1e-13));

  const auto q3 = sphere_quadrature(3, 1.0, {}, 2400);
  CHECK(std::abs(moment(q3, 0, 0) - 1.0 / 3) <= 1e-3);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(moment(q3, a, -1)) <= 1e-10);
    CHECK(std::abs(moment(q3, a, (a + 1) % 3)) <= 1e-10);
  }

  const auto q4 = sphere_quadrature(4, 2.0, {}, 100000, 3);
  double r2 = 0;
  for (int a = 0; a < 4; ++a) r2 += moment(q4, a, a);
  CHECK(std::abs(r2 - 4) <= 3e-2);
  // Sign-flip closure makes odd moments vanish exactly.
  CHECK(std::abs(moment(q4, 1, -1)) <= 1e-12);
  CHECK(std::abs(moment(q4, 1, 2)) <= 3 / std::sqrt(100000.0));

  CHECK_THROWS_AS(sphere_quadrature(7, 1.0), Error);
  CHECK_THROWS_AS(sphere_quadrature(3, 0.0), Error);
}

TEST_CASE("simplex thickness and distances") {
  const auto s = SimplexSpec::equilateral(2, 1.0);
  const auto D = s.distances();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(D(i, j) == doctest::Approx(i == j ? 0.0 : 1.0).epsilon(1e-14));
  CHECK(s.thickness() == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));

  const auto r = SimplexSpec::from_vertices({{1, 0, 0}, {0, 2, 0}});
  CHECK(r.thickness() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.thickness() <= r.max_length());
  CHECK_THROWS_AS(SimplexSpec::from_vertices({{1, 0}, {2, 0}}), Error);
}

TEST_CASE("intersection sphere of an equilateral triangle") {
  const auto s = SimplexSpec::equilateral(2, 1.0);
  Eigen::VectorXd x1(3);
  x1 << 0.6, 0.0, 0.8;
  const auto S = intersection_sphere(3, {x1}, s, 2);
  CHECK((S.center - x1 / 2).norm() <= 1e-12);
  CHECK(S.radius == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
  const Eigen::MatrixXd FtF = S.frame.transpose() * S.frame;
  CHECK((FtF - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);

  const auto S0 = intersection_sphere(3, {}, s, 1);
  CHECK(S0.radius == doctest::Approx(1.0));
  CHECK(S0.center.norm() == 0.0);
}

TEST_CASE("intersection sphere nodes satisfy their distance constraints") {
  const auto s = SimplexSpec::from_vertices({{1, 0, 0}, {0, 1, 0}});
  Eigen::VectorXd x1(3);
  x1 << 1, 0, 0;
  const auto S = intersection_sphere(3, {x1}, s, 2);
  CHECK((S.center - Eigen::Vector3d(0, 0, 0)).norm() <= 1e-12);  // right angle at the origin
  const auto q = S.quadrature(1000, 4);
  CHECK(q.size() >= 1000);
  for (std::size_t i = 0; i < q.size(); ++i) {
    Eigen::Map<const Eigen::VectorXd> y(q.node(i), 3);
    CHECK(std::abs(y.norm() - 1) <= 1e-8);
    CHECK(std::abs((y - x1).norm() - std::sqrt(2.0)) <= 1e-8);
  }

  // Chained anchors in d = 5 for a random 3-simplex.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> verts(3, std::vector<double>(3));
  for (auto& v : verts)
    for (auto& x : v) x = g(rng);
  const auto t = SimplexSpec::from_vertices(verts);
  std::vector<Eigen::VectorXd> anchors;
  for (int j = 1; j <= 3; ++j) {
    const auto Sj = intersection_sphere(5, anchors, t, j);
    const auto te = t.embedded(5);
    // Radius equals the distance from v_j to the span of earlier vertices.
    Eigen::MatrixXd V(5, j - 1);
    for (int i = 0; i < j - 1; ++i) V.col(i) = te.v[i];
    const Eigen::VectorXd vj = te.v[j - 1];
    const double dist = j == 1 ? vj.norm()
                               : (vj - V * (V.transpose() * V).ldlt().solve(V.transpose() * vj)).norm();
    CHECK(Sj.radius == doctest::Approx(dist).epsilon(1e-9));
    const auto q = Sj.quadrature(64, static_cast<std::uint64_t>(j));
    Eigen::Map<const Eigen::VectorXd> y(q.node(q.size() / 3), 5);
    anchors.push_back(y);
  }
  CHECK_THROWS_AS(intersection_sphere(5, {anchors[0] * 1.1}, t, 2), Error);
}

TEST_CASE("Haar rotations are special orthogonal and uniform") {
  const auto Us = haar_rotations(4, 50, 1);
  for (const auto& U : Us) {
    CHECK((U.transpose() * U - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(U.determinant() - 1) <= 1e-12);
  }
  const auto U2 = haar_rotations(2, 10000, 2);
  double mc = 0;
  for (const auto& U : U2) mc += U(0, 0);
  CHECK(std::abs(mc / 10000) <= 0.03);
  // On SO(3), tr U = 1 + 2 cos(theta) with angle density (1 - cos theta)/pi,
  // so E[tr U] = 0 and E[(tr U)^2] = 1.
  const auto U3 = haar_rotations(3, 10000, 3);
  double tr = 0, tr2 = 0;
  for (const auto& U : U3) {
    tr += U.trace();
    tr2 += U.trace() * U.trace();
  }
  CHECK(std::abs(tr / 10000) <= 0.05);
  CHECK(std::abs(tr2 / 10000 - 1) <= 0.05);
  // U e_1 is uniform on S^2: counts in octants pass a chi-square test.
  std::vector<int> oct(8, 0);
  for (const auto& U : U3) oct[(U(0, 0) > 0) + 2 * (U(1, 0) > 0) + 4 * (U(2, 0) > 0)]++;
  double chi2 = 0;
  for (int c : oct) chi2 += (c - 1250.0) * (c - 1250.0) / 1250.0;
  CHECK(chi2 < 24.3);  // 0.999 quantile with 7 degrees of freedom
}

TEST_CASE("sphere Fourier transform matches the Bessel closed form") {
  for (int d = 2; d <= 6; ++d) {
    CHECK(sphere_fourier(d, 0.0) == 1.0);
    for (double rho : {0.1, 0.5, 1.3, 4.7, 17.2}) {
      const double v = sphere_fourier(d, rho);
      CHECK(std::abs(v) <= 1.0);
      CHECK(std::abs(v - sphere_fourier_oracle(d, rho)) <= 1e-10);
    }
  }
  CHECK(std::abs(sphere_fourier(3, 0.5)) <= 1e-15);
}

TEST_CASE("sphere Fourier decay exponent") {
  for (int d = 2; d <= 4; ++d) {
    const auto fit = fit_sphere_decay(d);
    CHECK(std::abs(fit.exponent + 0.5 * (d - 1)) <= 0.1);
    for (std::size_t i = 1; i < fit.shell_max.size(); ++i) {
      const double ratio = fit.shell_max[i - 1] / fit.shell_max[i];
      CHECK(ratio >= 0.5 * std::pow(2.0, 0.5 * (d - 1)));
      CHECK(ratio <= 2.0 * std::pow(2.0, 0.5 * (d - 1)));
    }
  }
  CHECK(fit_sphere_decay(2).constant <= 1.0);
}
