/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_MEASURES_HPP
#define GEODENSITY_MEASURES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gd {

/** Point set with nonnegative weights summing to 1. Nodes are stored flat. */
struct Quadrature {
  int d = 0;
  std::vector<double> nodes;  // size() * d
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const double* node(std::size_t i) const { return nodes.data() + i * d; }
};

/**
 * Normalized surface measure on S^{d-1}(center, radius).
 *
 * d = 2: `budget` equispaced angles.  d = 3: a Fibonacci spiral of
 * budget/24 points closed under the 24 sign-flip/cyclic-permutation
 * symmetries, so all first moments and mixed second moments vanish and
 * each x_i^2 integrates to r^2/3 exactly.  d >= 4: seeded Gaussian
 * directions, each expanded by its 2^d sign flips.
 */
Quadrature sphere_quadrature(int d, double radius, const std::vector<double>& center = {},
                             int budget = 256, std::uint64_t seed = 1);

/** Simplex {0, v_1, ..., v_k}; vertices may live in any R^m with m >= k. */
struct SimplexSpec {
  std::vector<Eigen::VectorXd> v;

  static SimplexSpec from_vertices(const std::vector<std::vector<double>>& verts);
  // Regular simplex with all edges equal to `side`, vertices in R^k.
  static SimplexSpec equilateral(int k, double side);

  int k() const { return static_cast<int>(v.size()); }
  int ambient() const { return v.empty() ? 0 : static_cast<int>(v[0].size()); }
  Eigen::VectorXd vertex(int j) const;  // j = 0 is the origin
  Eigen::MatrixXd gram() const;
  // Pairwise distances between all k+1 vertices.
  Eigen::MatrixXd distances() const;
  // c_Delta = min_j dist(v_j, span of the other v_i).
  double thickness() const;
  double max_length() const;
  // Same simplex with vertices zero-padded to R^d.
  SimplexSpec embedded(int d) const;
};

/** Sphere inside an affine subspace: center + radius * frame * S^{m-1}. */
struct SphereDescriptor {
  int d = 0;
  Eigen::VectorXd center;
  double radius = 0;
  Eigen::MatrixXd frame;  // d x m, orthonormal columns

  Quadrature quadrature(int budget, std::uint64_t seed = 1) const;
};

/**
 * Locus of the j-th vertex given realized anchors x_1..x_{j-1}: the points y
 * with |y| = |v_j| and |y - x_i| = |v_j - v_i|.  The center solves the Gram
 * system of the anchors; the frame spans their orthogonal complement.
 */
SphereDescriptor intersection_sphere(int d, const std::vector<Eigen::VectorXd>& anchors,
                                     const SimplexSpec& simplex, int j);

// Haar-distributed rotations in SO(d).
std::vector<Eigen::MatrixXd> haar_rotations(int d, int count, std::uint64_t seed);

// Fourier transform of the normalized measure on the unit sphere S^{d-1}
// at frequency magnitude rho.  Real and bounded by 1.
double sphere_fourier(int d, double rho);

struct DecayFit {
  int d = 0;
  double exponent = 0;  // least-squares slope of log max|sigma^| vs log R
  double constant = 0;  // max over shells of max|sigma^| * R^{(d-1)/2}
  std::vector<double> shell_start;
  std::vector<double> shell_max;
};

// Dyadic-shell maxima of |sigma^| over [R, 2R] for R = r_min, 2 r_min, ... < r_max.
DecayFit fit_sphere_decay(int d, double r_min = 4, double r_max = 64, int samples = 512);

} // namespace gd

#endif
