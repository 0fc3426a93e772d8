/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "geodensity/error.hpp"

namespace gd {

namespace {

constexpr double kPi = std::numbers::pi;

// Unit-sphere nodes in R^m, flat, all weights equal.
std::vector<double> unit_sphere_nodes(int m, int budget, std::uint64_t seed) {
  std::vector<double> out;
  if (m == 1) return {1.0, -1.0};
  if (m == 2) {
    const int N = std::max(budget, 4);
    out.resize(2 * N);
    for (int k = 0; k < N; ++k) {
      const double t = 2 * kPi * k / N;
      out[2 * k] = std::cos(t);
      out[2 * k + 1] = std::sin(t);
    }
    return out;
  }
  if (m == 3) {
    const int base = std::max(1, budget / 24);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    out.reserve(static_cast<std::size_t>(base) * 72);
    for (int i = 0; i < base; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / base;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      const double p[3] = {r * std::cos(phi), r * std::sin(phi), z};
      for (int rot = 0; rot < 3; ++rot)
        for (int s = 0; s < 8; ++s)
          for (int a = 0; a < 3; ++a) {
            const double sign = ((s >> a) & 1) ? -1.0 : 1.0;
            out.push_back(sign * p[(a + rot) % 3]);
          }
    }
    return out;
  }
  const int flips = 1 << m;
  const int base = std::max(1, (budget + flips - 1) / flips);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<double> g(m);
  out.reserve(static_cast<std::size_t>(base) * flips * m);
  for (int i = 0; i < base; ++i) {
    double norm = 0;
    do {
      norm = 0;
      for (auto& x : g) {
        x = gauss(rng);
        norm += x * x;
      }
    } while (norm < 1e-300);
    norm = std::sqrt(norm);
    for (int s = 0; s < flips; ++s)
      for (int a = 0; a < m; ++a) out.push_back((((s >> a) & 1) ? -g[a] : g[a]) / norm);
  }
  return out;
}

} // namespace

Quadrature sphere_quadrature(int d, double radius, const std::vector<double>& center, int budget,
                             std::uint64_t seed) {
  require(d >= 2 && d <= 6, "sphere_quadrature supports d in 2..6, got " + std::to_string(d));
  require(radius > 0, "sphere radius must be positive");
  require(budget >= 16, "sphere quadrature budget must be at least 16");
  require(center.empty() || static_cast<int>(center.size()) == d,
          "sphere center must have d coordinates");
  Quadrature q;
  q.d = d;
  q.nodes = unit_sphere_nodes(d, budget, seed);
  const std::size_t N = q.nodes.size() / d;
  for (std::size_t i = 0; i < N; ++i)
    for (int a = 0; a < d; ++a) {
      double& x = q.nodes[i * d + a];
      x = radius * x + (center.empty() ? 0.0 : center[a]);
    }
  q.weights.assign(N, 1.0 / static_cast<double>(N));
  return q;
}

// ------------------------------------------------------------- simplices

SimplexSpec SimplexSpec::from_vertices(const std::vector<std::vector<double>>& verts) {
  require(!verts.empty(), "simplex needs at least one vertex besides the origin");
  const std::size_t m = verts[0].size();
  SimplexSpec s;
  for (const auto& p : verts) {
    require(p.size() == m, "simplex vertices must share one ambient dimension");
    s.v.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(m)));
  }
  require(static_cast<int>(m) >= s.k(), "simplex ambient dimension must be at least k");
  const Eigen::MatrixXd G = s.gram();
  const double scale = std::pow(G.diagonal().maxCoeff(), s.k());
  require(G.determinant() > 1e-12 * scale, "degenerate simplex: vertices are linearly dependent");
  return s;
}

SimplexSpec SimplexSpec::equilateral(int k, double side) {
  require(k >= 1, "simplex dimension must be positive");
  require(side > 0, "simplex side must be positive");
  // Gram matrix of a regular simplex with a vertex at the origin.
  Eigen::MatrixXd G = Eigen::MatrixXd::Constant(k, k, 0.5 * side * side);
  G.diagonal().setConstant(side * side);
  const Eigen::MatrixXd L = G.llt().matrixL();
  SimplexSpec s;
  for (int i = 0; i < k; ++i) s.v.push_back(L.row(i).transpose());
  return s;
}

Eigen::VectorXd SimplexSpec::vertex(int j) const {
  if (j == 0) return Eigen::VectorXd::Zero(ambient());
  return v.at(j - 1);
}

Eigen::MatrixXd SimplexSpec::gram() const {
  Eigen::MatrixXd G(k(), k());
  for (int i = 0; i < k(); ++i)
    for (int j = 0; j < k(); ++j) G(i, j) = v[i].dot(v[j]);
  return G;
}

Eigen::MatrixXd SimplexSpec::distances() const {
  Eigen::MatrixXd D(k() + 1, k() + 1);
  for (int i = 0; i <= k(); ++i)
    for (int j = 0; j <= k(); ++j) D(i, j) = (vertex(i) - vertex(j)).norm();
  return D;
}

double SimplexSpec::thickness() const {
  const Eigen::MatrixXd Ginv = gram().inverse();
  double c = INFINITY;
  for (int j = 0; j < k(); ++j) c = std::min(c, 1.0 / std::sqrt(Ginv(j, j)));
  return c;
}

double SimplexSpec::max_length() const {
  double m = 0;
  for (const auto& x : v) m = std::max(m, x.norm());
  return m;
}

SimplexSpec SimplexSpec::embedded(int d) const {
  require(d >= ambient(), "cannot embed a simplex into a smaller space");
  SimplexSpec s;
  for (const auto& x : v) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
    y.head(x.size()) = x;
    s.v.push_back(y);
  }
  return s;
}

// ------------------------------------------------------ intersection spheres

Quadrature SphereDescriptor::quadrature(int budget, std::uint64_t seed) const {
  const int m = static_cast<int>(frame.cols());
  Quadrature q;
  q.d = d;
  const auto u = unit_sphere_nodes(m, budget, seed);
  const std::size_t N = u.size() / m;
  q.nodes.resize(N * d);
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::Map<const Eigen::VectorXd> ui(u.data() + i * m, m);
    const Eigen::VectorXd y = center + radius * (frame * ui);
    for (int a = 0; a < d; ++a) q.nodes[i * d + a] = y[a];
  }
  q.weights.assign(N, 1.0 / static_cast<double>(N));
  return q;
}

SphereDescriptor intersection_sphere(int d, const std::vector<Eigen::VectorXd>& anchors,
                                     const SimplexSpec& simplex, int j) {
  require(j >= 1 && j <= simplex.k(), "target vertex index out of range");
  require(static_cast<int>(anchors.size()) == j - 1, "need exactly j-1 anchors");
  require(d >= j + 1, "intersection sphere needs d >= j+1");
  const SimplexSpec s = simplex.embedded(std::max(d, simplex.ambient()));
  const int na = j - 1;
  for (int i = 0; i < na; ++i) {
    require(anchors[i].size() == d, "anchor dimension mismatch");
    const double want = s.v[i].norm();
    require(std::abs(anchors[i].norm() - want) <= 1e-8 * std::max(1.0, want),
            "anchors do not realize the simplex: |x_" + std::to_string(i + 1) + "| is off");
    for (int l = 0; l < i; ++l) {
      const double dv = (s.v[i] - s.v[l]).norm();
      require(std::abs((anchors[i] - anchors[l]).norm() - dv) <= 1e-8 * std::max(1.0, dv),
              "anchors do not realize the simplex distances");
    }
  }
  SphereDescriptor out;
  out.d = d;
  const Eigen::VectorXd& vj = s.v[j - 1];
  if (na == 0) {
    out.center = Eigen::VectorXd::Zero(d);
    out.radius = vj.norm();
    out.frame = Eigen::MatrixXd::Identity(d, d);
    return out;
  }
  Eigen::MatrixXd X(d, na);
  Eigen::VectorXd b(na);
  for (int i = 0; i < na; ++i) {
    X.col(i) = anchors[i];
    b[i] = vj.dot(s.v[i]);
  }
  const Eigen::MatrixXd G = X.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  lu.setThreshold(1e-12);
  require(lu.rank() == na, "rank-deficient anchors: the simplex is degenerate");
  const Eigen::VectorXd a = lu.solve(b);
  out.center = X * a;
  const double r2 = vj.squaredNorm() - out.center.squaredNorm();
  require(r2 >= -1e-10 * std::max(1.0, vj.squaredNorm()),
          "inconsistent anchors: negative squared radius " + std::to_string(r2));
  out.radius = std::sqrt(std::max(0.0, r2));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  out.frame = Q.rightCols(d - na);
  return out;
}

// ------------------------------------------------------------------ Haar

std::vector<Eigen::MatrixXd> haar_rotations(int d, int count, std::uint64_t seed) {
  require(d >= 2 && d <= 6, "haar_rotations supports d in 2..6");
  require(count >= 0, "rotation count must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(count);
  for (int r = 0; r < count; ++r) {
    Eigen::MatrixXd Z(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) Z(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i)
      if (R(i, i) < 0) Q.col(i) = -Q.col(i);
    if (Q.determinant() < 0) Q.col(0) = -Q.col(0);
    out.push_back(std::move(Q));
  }
  return out;
}

// ------------------------------------------------------ Fourier transform

double sphere_fourier(int d, double rho) {
  require(d >= 2 && d <= 6, "sphere_fourier supports d in 2..6");
  rho = std::abs(rho);
  if (rho == 0) return 1.0;
  const double x = 2 * kPi * rho;
  if (d == 2) return std::cyl_bessel_j(0.0, x);
  if (d == 3) return std::sin(x) / x;
  // Latitude integral over [0, pi] with weight sin^{d-2}; the trapezoid rule
  // is spectrally accurate here because the integrand extends periodically.
  const int N = 1024 + 64 * static_cast<int>(std::ceil(rho));
  double num = 0, den = 0;
  for (int i = 1; i < N; ++i) {
    const double phi = kPi * i / N;
    const double w = std::pow(std::sin(phi), d - 2);
    num += std::cos(x * std::cos(phi)) * w;
    den += w;
  }
  return num / den;
}

DecayFit fit_sphere_decay(int d, double r_min, double r_max, int samples) {
  require(r_min > 0 && r_max > 2 * r_min, "decay fit needs 0 < r_min and r_max > 2 r_min");
  require(samples >= 16, "decay fit needs at least 16 samples per shell");
  DecayFit fit;
  fit.d = d;
  for (double R = r_min; 2 * R <= r_max * (1 + 1e-12); R *= 2) {
    double m = 0;
    for (int i = 0; i <= samples; ++i) {
      const double rho = R + R * i / samples;
      m = std::max(m, std::abs(sphere_fourier(d, rho)));
    }
    fit.shell_start.push_back(R);
    fit.shell_max.push_back(m);
  }
  const std::size_t K = fit.shell_start.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const double lx = std::log(fit.shell_start[i]), ly = std::log(fit.shell_max[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.exponent = K > 1 ? (K * sxy - sx * sy) / (K * sxx - sx * sx) : 0.0;
  for (std::size_t i = 0; i < K; ++i)
    fit.constant =
        std::max(fit.constant, fit.shell_max[i] * std::pow(fit.shell_start[i], 0.5 * (d - 1)));
  return fit;
}

} // namespace gd
