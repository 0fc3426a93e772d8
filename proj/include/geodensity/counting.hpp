/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_COUNTING_HPP
#define GEODENSITY_COUNTING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "geodensity/grid.hpp"
#include "geodensity/kernels.hpp"
#include "geodensity/measures.hpp"

namespace gd {

enum class CountMethod { Fft, Quadrature, Brute, Rotation, Iterated, MonteCarlo };

std::string to_string(CountMethod m);
CountMethod parse_count_method(const std::string& s);

struct CountResult {
  double value = 0;
  double error = 0;  // >= 0; see each operator for what it estimates
  CountMethod method = CountMethod::Fft;
  std::size_t nodes = 0;
  int rotations = 0;
};

struct CountOptions {
  CountMethod method = CountMethod::Fft;
  int budget = 0;  // 0 picks the operator default
  std::uint64_t seed = 1;
};

// Largest grid accepted by the brute-force paths.
constexpr int kBruteMaxN = 24;

/**
 * T(f0,f1)(lambda) = \iint f0(x) f1(x - lambda s) dsigma(s) dx.
 *
 * Fft: correlate once, then average the multilinear interpolant of C over
 * the sphere nodes (exact for cell-average data, so only the sphere rule
 * contributes error).  The error is |T_N - T_{N/2}| for d <= 3 and the
 * standard error over sign-flip groups for d >= 4.
 * Brute: the same nodes summed directly, n <= 24.
 * Quadrature: nodes rounded to the nearest lattice shift; the error is the
 * distance to the multilinear value.
 */
CountResult count_distance(const GridFunction& f0, const GridFunction& f1, double lambda,
                           const CountOptions& opt = {});

/**
 * T_Delta(f_0..f_k)(lambda) = \iint f_0(x) prod_i f_i(x - lambda U v_i) dmu(U) dx.
 * Rotation: Haar average with nearest-lattice vertex offsets; standard error.
 * Iterated: nested intersection-sphere quadrature; standard error across
 * the outer chains.
 */
CountResult count_simplex(const std::vector<GridFunction>& fs, const SimplexSpec& simplex,
                          double lambda, const CountOptions& opt = {});

/**
 * T_box_c with slots in the order (f00, f10, f01, f11):
 *   f00(x,y) f10(x - lambda x1, y) f01(x, y - c lambda y1) f11(x - lambda x1, y - c lambda y1)
 * on a product grid.  Fft is exact for cell-average data up to the two
 * sphere rules; its error is the change when both rules are halved.
 */
CountResult count_rectangle(const GridFunction& f00, const GridFunction& f10,
                            const GridFunction& f01, const GridFunction& f11, double lambda,
                            double c, const CountOptions& opt = {});

/**
 * Double rotation average for Delta_{k1} x Delta_{k2}.  fs[i][j] is the slot
 * at vertex (v_i, w_j).  Rotation sets use seeds `seed` and `seed + 1`, and
 * the full cross product is summed, so factorized slots factor exactly.
 */
CountResult count_product_simplices(const std::vector<std::vector<GridFunction>>& fs,
                                    const SimplexSpec& s1, const SimplexSpec& s2, double lambda,
                                    const CountOptions& opt = {});

struct RelativeWeights {
  GridFunction nu;        // nu1^{1/2} (x) nu2^{1/2}
  GridFunction nu_tilde;  // nu1^{1/(k2+1)} (x) nu2^{1/(k1+1)}
  GridFunction nu1;       // beta1^{-1} 1_{B1}
  GridFunction nu2;
  double beta1 = 0;
  double beta2 = 0;
};

RelativeWeights make_relative_weights(const GridFunction& B1, const GridFunction& B2, int k1 = 1,
                                      int k2 = 1);

// Dense rectangle form with arbitrary kernels on each factor:
//   sum_s P(s) sum_t Q(t) h^d sum_{x,y} f00(x,y) f10(x-s,y) f01(x,y-t) f11(x-s,y-t).
// All kernel pairs share one pass over the t supports.
std::vector<double> rectangle_form(const GridFunction& f00, const GridFunction& f10,
                                   const GridFunction& f01, const GridFunction& f11,
                                   const std::vector<std::pair<ShiftKernel, ShiftKernel>>& kernels);

// Same form by direct summation (n <= 24).
double rectangle_form_direct(const GridFunction& f00, const GridFunction& f10,
                             const GridFunction& f01, const GridFunction& f11,
                             const ShiftKernel& P, const ShiftKernel& Q);

} // namespace gd

#endif
