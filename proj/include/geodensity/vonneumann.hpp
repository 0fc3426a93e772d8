/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_VONNEUMANN_HPP
#define GEODENSITY_VONNEUMANN_HPP

// Inequality reports for counting forms bounded by uniformity norms.
//
// Each check computes a lattice count T, a main term built from norms at the
// scale L = eps^4 lambda, and an asymptotic envelope K * (scaling inputs).
// Independently of the envelope, every check walks the chain of exact
// inequalities and identities that lead from |T| to a Fourier-side bound;
// those steps hold on the lattice and are reported with tolerance 1e-8.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geodensity/grid.hpp"
#include "geodensity/measures.hpp"

namespace gd {

enum class Verdict { Holds, HoldsWithinNumerics, Violated };
std::string to_string(Verdict v);

struct ExactStep {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool identity = false;  // lhs == rhs rather than lhs <= rhs
  double tol = 0;
  bool ok = false;
};

struct InequalityReport {
  std::string check;
  double lhs = 0;
  double rhs_main = 0;
  double rhs_error = 0;
  double numeric_error = 0;
  double slack = 0;  // rhs_main + rhs_error - lhs
  Verdict verdict = Verdict::Holds;
  std::map<std::string, double> inputs;  // scales, constants, hypothesis measurements
  std::vector<ExactStep> exact_steps;
  int argmin_slot = -1;
  bool hypotheses_met = true;
  std::string note;

  bool exact_ok() const;
  // Largest (lhs - rhs) / tol over the exact steps; <= 1 when all pass.
  double worst_exact_ratio() const;
};

struct GvnOptions {
  double K = 0;           // envelope constant; 0 picks default_envelope_constant
  int budget = 0;         // sphere nodes (distance, rectangle) or chain budget (simplex)
  std::uint64_t seed = 1;
  bool fourier_steps = true;  // include the Plancherel steps (needs an extra transform)
};

// 3 (C_psi^{1/3} C_sigma^{2/3})^{1/2}, with C_psi = pi / sqrt(3) and C_sigma
// the fitted sphere decay constant in dimension d.  Cached per d.
double default_envelope_constant(int d);

/**
 * lhs = |T(f0,f1)(c lambda)| with the multilinear sphere kernel.  Exact
 * steps: Parseval identity against direct summation (small grids), then
 * |T| <= sum |F0||F1||P^| <= the Cauchy-Schwarz product of the weighted
 * energies.  rhs = u1(f0) u1(f1) + K c^{-1/6} eps^{2/3}.
 */
InequalityReport check_gvn_distance(const GridFunction& f0, const GridFunction& f1, double lambda,
                                    double eps, double c, const GvnOptions& opt = {});

enum class SimplexVariant { Direct, Squared };

/**
 * Iterated-chain count with nearest kernels.  With G_w = P_w * f_k:
 *   |T| <= sum_w w h^d sum_grid |G_w| <= (sum_w w h^d sum_grid G_w^2)^{1/2}
 *       <= (sum_w w h^d sum_Z^d G_w^2)^{1/2} = Fourier form.
 * Direct: rhs = min_j u1(f_j) + K c_D^{-1/6} eps^{2/3}.
 * Squared: rhs = sqrt(2 pi) min_j u1(f_j)^{1/2} + K c_D^{-1/12} eps^{1/3}, and
 * the Z^d energy is also expanded into vertex pairs over the autocorrelation
 * of f_k (the doubled-vertex form).
 */
InequalityReport check_gvn_simplex(const std::vector<GridFunction>& fs, const SimplexSpec& simplex,
                                   double lambda, double eps, SimplexVariant variant,
                                   const GvnOptions& opt = {});

struct AngularReport {
  int d = 0;
  int k = 0;
  int functions = 0;
  double max_rel_error = 0;
  double max_error_bar = 0;  // relative, per function, max over functions
  double max_ratio = 0;      // max of rel_error / error_bar
  double max_chord_error = 0;
  std::size_t nodes = 0;     // nodes in the decomposed rule
  bool passed = false;
};

/**
 * Splits the intersection sphere for vertex k+1 by the angle theta from the
 * realized vertex x_k: weight (sin theta)^{d-k-1} on [0, pi] times the
 * normalized sub-sphere at that angle.  Compares both rules on random smooth
 * functions (pass: relative error <= 3 error bars or <= 1e-10), and checks
 * |v_{k+1} - v_k| = 2 sin(theta/2) dist(v_k, span{v_1..v_{k-1}}).
 */
AngularReport check_angular_decomposition(const SimplexSpec& simplex, int d, int theta_bins,
                                          int budget, std::uint64_t seed, int functions = 20);

// Point at angle theta from the last vertex v_k on its intersection sphere,
// rotating along the first tangent direction of the sphere's frame.
Eigen::VectorXd rotated_vertex(const SimplexSpec& simplex, int d, double theta);

/**
 * Slots (f00, f10, f01, f11) weighted by nu = nu1^{1/2} (x) nu2^{1/2}.
 * Exact steps: slice identity T = sum_s P1(s) h^{d1} sum_x tau(x,s), the
 * triangle bound, the per-slice Parseval-Cauchy-Schwarz bound and the
 * Cauchy-Schwarz over slices.  rhs = prod ||f_ij nu||_box(L) +
 * K c^{-1/24} eps^{1/6} / (beta1 beta2); the c^{-1/6} eps^{2/3} envelope is
 * recorded as input `rhs_error_alt`.
 */
InequalityReport check_gvn_rectangle(const std::array<GridFunction, 4>& f, const GridFunction& B1,
                                     const GridFunction& B2, double lambda, double eps, double c,
                                     const GvnOptions& opt = {});

/**
 * nu = beta^{-1} 1_B, slots f_i nu.  lhs = |T|^2.  Exact steps:
 *   |T| <= A = sum_w w h^d sum prod_{i<k} nu_i |G_w|,  A^2 <= W Q,
 *   Q = M + E,  E = sum_j E_j (telescoping),  M <= M_Z = Fourier form.
 * rhs = min_j psi_form(f_j nu) + K beta^{-3k-3} c_D^{-1/2} eps^{1/4}.
 */
InequalityReport check_gvn_relative_simplex(const std::vector<GridFunction>& fs,
                                            const SimplexSpec& simplex, const GridFunction& B,
                                            double lambda, double eps, const GvnOptions& opt = {});

} // namespace gd

#endif
