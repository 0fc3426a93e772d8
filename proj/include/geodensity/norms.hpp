/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_NORMS_HPP
#define GEODENSITY_NORMS_HPP

// Window functionals.  A window of side L is t + Q_L with Q_L = [-L/2, L/2]^d,
// and f is zero outside [0,1]^d.  L snaps to m = round(L/h) cells; every
// result reports the snapped value.

#include <optional>
#include <vector>

#include "geodensity/grid.hpp"

namespace gd {

// m = round(L/h), with 1 <= m <= n enforced.
int window_cells(double L, int n);

// (\int_{[0,1]^d} |L^{-d} \int_{t+Q_L} f|^2 dt)^{1/2}, integrated exactly in t.
double u1_norm(const GridFunction& f, double L);

// Axis-aligned lattice cube: cells lo[a] .. lo[a] + extent - 1.
struct CubeWindow {
  std::vector<int> lo;
  int extent = 0;
};

struct UniformityReport {
  double L = 0;
  double norm = 0;      // U1(L) norm of the balanced part
  double eps_min = 0;   // root-mean-square window density deviation
  double bad_mass = 0;  // measure of t with window density below (1 - eps^2) delta
  double eps = 0;       // the eps used for bad_mass (eps_min when not given)
  double density = 0;   // |A| globally, |A cap Q| / |Q| on a window
  bool windowed = false;
};

/**
 * Global: t ranges over [0,1]^d and overflowing windows keep their zero
 * extension, so a full cube has eps_min of order sqrt(L).
 * Windowed: t ranges over the centres with t + Q_L inside the cube, and the
 * reference density is that of A on the cube.  Needs extent >= m.
 */
UniformityReport uniformity_defect(const GridFunction& A, double L,
                                   const std::optional<CubeWindow>& window = std::nullopt,
                                   std::optional<double> eps = std::nullopt);

// \iint f0(x) f1(x - z) psi_L(z) dz dx with psi_L = L^{-2d} 1_{Q_L} * 1_{Q_L}.
// Exact for cell-average data.  psi_form(f, f, L) = u1_norm(f, L)^2 + O(L).
double psi_form(const GridFunction& f0, const GridFunction& f1, double L);

/**
 * Box-norm windows are lattice aligned: corner cells c1 (d1 entries) and c2
 * (d2 entries), side m.  The fourth power on one window is
 *   ||F F^T||_F^2 / (m^{d1} m^{d2})^2,
 * F the restriction of f to the window (zero outside the grid).
 */
double box_norm_window4(const GridFunction& f, int m, const std::vector<int>& c1,
                        const std::vector<int>& c2);
double box_norm_window(const GridFunction& f, double L, const std::vector<int>& c1,
                       const std::vector<int>& c2);

// Fourth powers of the windowed norm on a lattice of window corners, with
// trapezoid weights for the t-integral over [0,1]^{d1} x [0,1]^{d2}.
struct BoxField {
  int m = 0;
  int stride = 0;
  std::vector<std::vector<int>> corners1;  // per window: d1 corner cells
  std::vector<std::vector<int>> corners2;
  std::vector<double> weights1;  // sum to 1
  std::vector<double> weights2;
  std::vector<double> value4;  // corners1.size() x corners2.size(), row-major
};

// stride 0 picks max(1, m/4); stride 1 visits every lattice-aligned window.
BoxField box_norm_field(const GridFunction& f, double L, int stride = 0);

struct BoxNorm {
  double L = 0;
  double value = 0;
  double fourth = 0;  // before clamping; >= -1e-10 is asserted
  int stride = 0;
};

BoxNorm box_norm(const GridFunction& f, double L, int stride = 0);

// \iiiint f(x,y) f(x-s,y) f(x,y-t) f(x-s,y-t) psi_L(s) psi_L(t); the
// fourth power of the box norm up to O(L).
double box_psi_form(const GridFunction& f, double L);

} // namespace gd

#endif
