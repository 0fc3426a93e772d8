/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_GRID_HPP
#define GEODENSITY_GRID_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace gd {

constexpr int kMaxDim = 6;

/**
 * Real function on the uniform lattice of [0,1]^d with n cells per axis.
 *
 * Values are cell averages; the function is zero outside the unit cube.
 * The linear index is row-major with axis 0 slowest.  A product grid
 * [0,1]^{d1} x [0,1]^{d2} sets `split = d1`; its values then form an
 * n^{d1} x n^{d2} row-major matrix with rows indexed by x and columns by y.
 */
struct GridFunction {
  int d = 0;
  int n = 0;
  int split = 0;
  bool indicator = false;
  std::vector<double> v;

  static GridFunction zeros(int d, int n, int split = 0);
  static GridFunction constant(int d, int n, double c, int split = 0);

  std::size_t size() const { return v.size(); }
  double h() const { return 1.0 / n; }
  double cell_volume() const;
  bool is_product() const { return split > 0; }
  int d1() const { return split; }
  int d2() const { return d - split; }
  std::size_t rows() const;  // n^{d1}
  std::size_t cols() const;  // n^{d2}

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  // Value at lattice index idx (length d); zero outside the grid.
  double at(const int* idx) const;
};

std::size_t ipow(std::size_t base, int e);
std::size_t flat_index(const int* idx, int d, int n);
void unflatten(std::size_t i, int d, int n, int* idx);

/** Expression tree describing a subset of [0,1]^d. */
struct SetSpec {
  enum class Kind { Cube, Ball, Halfspace, Random, Product, Union, Intersect, Complement };

  Kind kind = Kind::Cube;
  std::vector<double> center;
  std::vector<double> halfwidth;  // one entry (cube) or one per axis (box)
  std::vector<double> normal;
  double radius = 0;
  double offset = 0;
  double p = 0;
  double cellsize = 0;
  std::uint64_t seed = 0;
  int dim_hint = 0;  // random sets: 0 means "take the grid dimension"
  std::vector<SetSpec> children;

  static SetSpec cube(std::vector<double> center, double halfwidth);
  static SetSpec box(std::vector<double> center, std::vector<double> halfwidths);
  static SetSpec ball(std::vector<double> center, double r);
  // {x : normal . x <= offset}
  static SetSpec halfspace(std::vector<double> normal, double offset);
  static SetSpec random(double p, double cellsize, std::uint64_t seed, int dim = 0);
  static SetSpec product(SetSpec a, SetSpec b);
  static SetSpec union_of(std::vector<SetSpec> parts);
  static SetSpec intersect(std::vector<SetSpec> parts);
  static SetSpec complement(SetSpec a);

  // Intrinsic dimension, or 0 when it adapts to the grid.
  int dim() const;
};

// Cell-average rasterization.  Exact for boxes, axis-aligned halfspaces,
// aligned random lattices and products; balls and oblique halfspaces use
// 3^d supersampling on boundary cells.
GridFunction make_grid_function(const SetSpec& spec, int d, int n);

double density(const GridFunction& f);

// 1_A - alpha 1, or 1_A - alpha 1_mask with alpha = |A| / |mask|.
GridFunction balanced_part(const GridFunction& a,
                           const std::optional<GridFunction>& mask = std::nullopt);

// f * psi_L sampled at cell centres, psi_L = L^{-2d} 1_{Q_L} * 1_{Q_L}.
GridFunction box_smooth(const GridFunction& f, double L);

/**
 * C(z) = \int f0(x) f1(x - z) dx at lattice shifts z = k h, |k_i| <= n-1.
 * Between lattice shifts C is the multilinear interpolant of these values,
 * which is exact for cell-average functions.
 */
struct CorrelationField {
  int d = 0;
  int n = 0;
  std::vector<double> values;  // (2n-1)^d entries, offset k_i stored at k_i + n - 1

  double at(const int* k) const;
  double interpolate(const double* z) const;  // z in units of [0,1] lengths
};

CorrelationField correlate(const GridFunction& f0, const GridFunction& f1);

// Lattice restriction: values on the cells of box [lo, hi) rescaled to a new
// unit-cube grid with hi-lo cells per axis (all extents equal).
GridFunction restrict_to_box(const GridFunction& f, const std::vector<int>& lo, int extent);

// Factor grids g (d1) and h (d2) -> g(x) h(y) on the product grid.
GridFunction tensor(const GridFunction& g, const GridFunction& h);

// Product of values cell by cell.
GridFunction pointwise(const GridFunction& a, const GridFunction& b);

} // namespace gd

#endif
