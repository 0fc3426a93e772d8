/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_KERNELS_HPP
#define GEODENSITY_KERNELS_HPP

// Sparse lattice kernels.  Every counting operator in this library reduces
// to sums of the form  sum_k P(k) C(k)  where C(k) = h^d sum_x f0[x] f1[x-k]
// is the lattice correlation and P is a finite weight map on offsets.

#include <cstddef>
#include <vector>

#include "geodensity/grid.hpp"
#include "geodensity/measures.hpp"

namespace gd {

enum class KernelMode {
  Nearest,     // each node moves to the closest lattice offset
  Multilinear  // each node spreads over its 2^d cell corners
};

struct ShiftKernel {
  int d = 0;
  std::vector<int> offsets;  // size() * d, sorted, no duplicates
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const int* offset(std::size_t i) const { return offsets.data() + i * d; }
  int reach() const;  // max |offset component|
  double total() const;
};

/**
 * Kernel of a point measure whose nodes are shift vectors in length units.
 * Multilinear mode is exact for cell-average functions: the correlation of
 * two such functions is the multilinear interpolant of its lattice values.
 */
ShiftKernel kernel_from_nodes(const Quadrature& q, double h, KernelMode mode);

// Normalized sphere of radius r in R^d as a shift kernel.
ShiftKernel sphere_kernel(int d, double r, double h, int budget, std::uint64_t seed,
                          KernelMode mode);

/**
 * Lattice form of psi_L = L^{-2d} 1_{Q_L} * 1_{Q_L}: weight of offset k is the
 * integral of psi_L against the hat function of cell offset k, so
 * sum_k W(k) C(k) = \int C(z) psi_L(z) dz exactly for cell-average data.
 */
ShiftKernel tent_kernel(int d, double L, double h);

// sum_k P(k) C(k) by direct summation (no transforms).
double kernel_pair_direct(const GridFunction& f0, const GridFunction& f1, const ShiftKernel& P);

/**
 * The same sum through a zero-padded transform of size M^d, together with
 * the two majorants used in Fourier arguments:
 *   value    = (h^d/M^d) Re sum F0 conj(F1) conj(P^)
 *   abs_sum  = (h^d/M^d) sum |F0| |F1| |P^|            >= |value|
 *   cs_bound = sqrt(energy0 * energy1)                 >= abs_sum
 * with energy_j = (h^d/M^d) sum |F_j|^2 |P^|.
 */
struct SpectralPair {
  double value = 0;
  double abs_sum = 0;
  double cs_bound = 0;
  double energy0 = 0;
  double energy1 = 0;
  int M = 0;
};

SpectralPair kernel_pair_spectral(const GridFunction& f0, const GridFunction& f1,
                                  const ShiftKernel& P);

// Transform size with no wraparound for an n-cell grid and kernel reach R.
int transform_size(int n, int reach);

} // namespace gd

#endif
