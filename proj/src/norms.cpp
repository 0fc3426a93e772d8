/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/norms.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "geodensity/counting.hpp"
#include "geodensity/error.hpp"
#include "geodensity/kernels.hpp"

namespace gd {

namespace {

// Banded map from a line of cells to a line of nodes: out[i] = sum_j w[i][j] in[j0[i] + j].
struct Band {
  std::vector<int> j0;
  std::vector<std::vector<double>> w;
  std::size_t rows() const { return j0.size(); }
};

// Applies `b` along axis `a` of an array with extents `dims`; dims[a] becomes b.rows().
std::vector<double> apply_band(const std::vector<double>& x, std::vector<std::size_t>& dims, int a,
                               const Band& b) {
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= dims[i];
  for (std::size_t i = a + 1; i < dims.size(); ++i) inner *= dims[i];
  const std::size_t len = dims[a], R = b.rows();
  std::vector<double> y(outer * R * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < R; ++r) {
      double* dst = y.data() + (o * R + r) * inner;
      for (std::size_t j = 0; j < b.w[r].size(); ++j) {
        const std::size_t src = static_cast<std::size_t>(b.j0[r]) + j;
        if (src >= len) continue;
        const double w = b.w[r][j];
        if (w == 0) continue;
        const double* s = x.data() + (o * len + src) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += w * s[i];
      }
    }
  dims[a] = R;
  return y;
}

// t-integration rule along one axis, in cell units.  Window centre u covers
// [u - m/2, u + m/2]; the overlap with each cell is linear in u between
// consecutive points of Z + m/2, so W(t) is multilinear between nodes and
// the hat-function Gram integrates W^2 exactly.
struct AxisRule {
  Band overlap;               // node -> cells
  std::vector<double> mass;   // integral of each hat, normalized to total 1
  Band gram;                  // normalized tridiagonal Gram
};

AxisRule axis_rule(double a, double b, int m, int cells) {
  std::vector<double> t{a};
  if (b - a > 1e-12) {
    const double half = 0.5 * m;
    for (double u = std::floor(a - half) + half; u < b; u += 1.0)
      if (u > a + 1e-12 && u < b - 1e-12) t.push_back(u);
    t.push_back(b);
  }
  const std::size_t N = t.size();
  AxisRule r;
  for (double u : t) {
    const double lo = u - 0.5 * m, hi = u + 0.5 * m;
    const int j0 = std::max(0, static_cast<int>(std::floor(lo)));
    const int j1 = std::min(cells, static_cast<int>(std::ceil(hi)));
    std::vector<double> w;
    for (int j = j0; j < j1; ++j) w.push_back(std::max(0.0, std::min<double>(j + 1, hi) - std::max<double>(j, lo)));
    r.overlap.j0.push_back(j0);
    r.overlap.w.push_back(std::move(w));
  }
  if (N == 1) {
    r.mass = {1.0};
    r.gram.j0 = {0};
    r.gram.w = {{1.0}};
    return r;
  }
  const double len = b - a;
  r.mass.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double l = i > 0 ? t[i] - t[i - 1] : 0.0;
    const double rr = i + 1 < N ? t[i + 1] - t[i] : 0.0;
    r.mass[i] = 0.5 * (l + rr) / len;
    std::vector<double> w;
    int j0 = static_cast<int>(i);
    if (i > 0) {
      j0 = static_cast<int>(i) - 1;
      w.push_back(l / 6 / len);
    }
    w.push_back((l + rr) / 3 / len);
    if (i + 1 < N) w.push_back(rr / 6 / len);
    r.gram.j0.push_back(j0);
    r.gram.w.push_back(std::move(w));
  }
  return r;
}

struct WindowStats {
  double mean_sq = 0;  // average over t of (W / m^d - shift)^2
  double mean = 0;     // average over t of W / m^d
  std::vector<double> node_value;
  std::vector<double> node_mass;
};

// Window averages of `x` (cube of `cells` per axis, d axes) for centres in
// [a, b]^d (cell units).  The shift is removed before squaring so that a
// vanishing deviation does not lose digits to cancellation.
WindowStats window_stats(const std::vector<double>& x, int d, int cells, int m, double a, double b,
                         double shift = 0) {
  const AxisRule rule = axis_rule(a, b, m, cells);
  std::vector<std::size_t> dims(d, cells);
  std::vector<double> W = x;
  for (int ax = 0; ax < d; ++ax) W = apply_band(W, dims, ax, rule.overlap);
  const double norm = std::pow(static_cast<double>(m), -d);
  for (auto& w : W) w *= norm;
  std::vector<double> GW = W;
  for (auto& w : GW) w -= shift;
  std::vector<std::size_t> gdims = dims;
  for (int ax = 0; ax < d; ++ax) GW = apply_band(GW, gdims, ax, rule.gram);
  WindowStats s;
  const std::size_t T = rule.mass.size();
  s.node_mass.assign(W.size(), 1.0);
  int idx[kMaxDim];
  for (std::size_t i = 0; i < W.size(); ++i) {
    unflatten(i, d, static_cast<int>(T), idx);
    double c = 1;
    for (int ax = 0; ax < d; ++ax) c *= rule.mass[idx[ax]];
    s.node_mass[i] = c;
    s.mean += c * W[i];
    s.mean_sq += GW[i] * (W[i] - shift);
  }
  s.node_value = std::move(W);
  return s;
}

std::vector<double> cube_values(const GridFunction& f, const CubeWindow& w) {
  const int d = f.d, e = w.extent;
  const std::size_t N = ipow(e, d);
  std::vector<double> out(N);
  int idx[kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    unflatten(i, d, e, idx);
    for (int a = 0; a < d; ++a) idx[a] += w.lo[a];
    out[i] = f.at(idx);
  }
  return out;
}

// Per-axis lattice of window corners with trapezoid weights for t in [0,1].
// Corner k means cells k .. k+m-1, i.e. centre (k + m/2) h.
void corner_axis(int n, int m, int stride, std::vector<int>& k, std::vector<double>& w) {
  const double lo = -0.5 * m, hi = n - 0.5 * m;
  const int kmin = static_cast<int>(std::ceil(lo)), kmax = static_cast<int>(std::floor(hi));
  k.clear();
  for (int c = kmin; c <= kmax; c += stride) k.push_back(c);
  if (k.back() != kmax) k.push_back(kmax);
  w.assign(k.size(), 0.0);
  w.front() += k.front() - lo;
  w.back() += hi - k.back();
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    const double l = k[i + 1] - k[i];
    w[i] += 0.5 * l;
    w[i + 1] += 0.5 * l;
  }
  for (auto& x : w) x /= n;
}

// Tensor lattice of corners in dim dimensions.
void corner_lattice(int dim, int n, int m, int stride, std::vector<std::vector<int>>& corners,
                    std::vector<double>& weights, std::vector<int>& axis) {
  std::vector<double> aw;
  corner_axis(n, m, stride, axis, aw);
  const std::size_t T = axis.size(), N = ipow(T, dim);
  corners.assign(N, std::vector<int>(dim));
  weights.assign(N, 1.0);
  int idx[kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    unflatten(i, dim, static_cast<int>(T), idx);
    for (int a = 0; a < dim; ++a) {
      corners[i][a] = axis[idx[a]];
      weights[i] *= aw[idx[a]];
    }
  }
}

// Calls visit(i1, row) with row[i2] = fourth power at corner pair (i1, i2).
// For fixed x-window, sum over pairs x, x' of (window sum over y of
// f(x,.) f(x',.))^2, the y-window sums taken separably on the corner lattice.
template <class Visit>
void box_scan(const GridFunction& f, int m, int stride, std::vector<std::vector<int>>& c1,
              std::vector<double>& w1, std::vector<std::vector<int>>& c2, std::vector<double>& w2,
              Visit visit) {
  const int d1 = f.d1(), d2 = f.d2(), n = f.n;
  std::vector<int> axis1, axis2;
  corner_lattice(d1, n, m, stride, c1, w1, axis1);
  corner_lattice(d2, n, m, stride, c2, w2, axis2);
  Band ysum;
  for (int k : axis2) {
    const int j0 = std::max(0, k), j1 = std::min(n, k + m);
    ysum.j0.push_back(j0);
    ysum.w.push_back(std::vector<double>(std::max(0, j1 - j0), 1.0));
  }
  const std::size_t cols = f.cols();
  const double N12 = static_cast<double>(ipow(m, d1)) * static_cast<double>(ipow(m, d2));
  const double scale = 1.0 / (N12 * N12);
  std::vector<double> row(c2.size());
  std::vector<std::size_t> xs;
  std::vector<double> g(cols);
  int idx[kMaxDim];
  for (std::size_t i1 = 0; i1 < c1.size(); ++i1) {
    xs.clear();
    const std::size_t cells = ipow(m, d1);
    for (std::size_t r = 0; r < cells; ++r) {
      unflatten(r, d1, m, idx);
      bool in = true;
      std::size_t x = 0;
      for (int a = 0; a < d1; ++a) {
        const int v = c1[i1][a] + idx[a];
        if (v < 0 || v >= n) in = false;
        x = x * n + v;
      }
      if (!in) continue;
      const double* fr = f.v.data() + x * cols;
      if (std::any_of(fr, fr + cols, [](double v) { return v != 0; })) xs.push_back(x);
    }
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = i; j < xs.size(); ++j) {
        const double* a = f.v.data() + xs[i] * cols;
        const double* b = f.v.data() + xs[j] * cols;
        for (std::size_t y = 0; y < cols; ++y) g[y] = a[y] * b[y];
        std::vector<std::size_t> dims(d2, n);
        std::vector<double> S = g;
        for (int ax = 0; ax < d2; ++ax) S = apply_band(S, dims, ax, ysum);
        const double mult = i == j ? 1.0 : 2.0;
        for (std::size_t k = 0; k < S.size(); ++k) row[k] += mult * S[k] * S[k];
      }
    for (auto& v : row) v *= scale;
    visit(i1, row);
  }
}

void check_box_args(const GridFunction& f, double L) {
  require(f.is_product(), "box norm needs a product grid");
  require(L <= 0.25 + 1e-12, "box norm scale must be at most 1/4");
}

} // namespace

int window_cells(double L, int n) {
  require(L > 0, "window scale must be positive");
  const int m = static_cast<int>(std::lround(L * n));
  require_resolved(m >= 1, "window scale is below one grid cell");
  require(m <= n, "window scale exceeds the unit cube");
  return m;
}

double u1_norm(const GridFunction& f, double L) {
  require(L <= 0.25 + 1e-12, "U1 scale must be at most 1/4");
  const int m = window_cells(L, f.n);
  const auto s = window_stats(f.v, f.d, f.n, m, 0.0, f.n);
  return std::sqrt(std::max(0.0, s.mean_sq));
}

UniformityReport uniformity_defect(const GridFunction& A, double L,
                                   const std::optional<CubeWindow>& window,
                                   std::optional<double> eps) {
  const int m = window_cells(L, A.n);
  UniformityReport r;
  r.L = static_cast<double>(m) / A.n;
  WindowStats s;
  if (window) {
    require(static_cast<int>(window->lo.size()) == A.d, "window corner has the wrong dimension");
    require(window->extent >= m, "window cube is smaller than the uniformity scale");
    const auto x = cube_values(A, *window);
    double sum = 0;
    for (double v : x) sum += v;
    r.density = sum / static_cast<double>(x.size());
    r.windowed = true;
    if (r.density <= 0) throw Error(ErrorKind::Hypothesis, "set is empty on the window");
    s = window_stats(x, A.d, window->extent, m, 0.5 * m, window->extent - 0.5 * m, r.density);
  } else {
    r.density = density(A);
    if (r.density <= 0) throw Error(ErrorKind::Hypothesis, "set is empty");
    s = window_stats(A.v, A.d, A.n, m, 0.0, A.n, r.density);
  }
  const double a = r.density;
  r.eps_min = std::sqrt(std::max(0.0, s.mean_sq));
  r.norm = window ? r.eps_min : u1_norm(balanced_part(A), std::min(r.L, 0.25));
  r.eps = eps.value_or(r.eps_min);
  const double thr = (1 - r.eps * r.eps) * a;
  for (std::size_t i = 0; i < s.node_value.size(); ++i)
    if (s.node_value[i] < thr - 1e-12) r.bad_mass += s.node_mass[i];
  r.bad_mass = std::clamp(r.bad_mass, 0.0, 1.0);
  return r;
}

double psi_form(const GridFunction& f0, const GridFunction& f1, double L) {
  const int m = window_cells(L, f0.n);
  const ShiftKernel P = tent_kernel(f0.d, static_cast<double>(m) / f0.n, f0.h());
  return kernel_pair_spectral(f0, f1, P).value;
}

double box_norm_window4(const GridFunction& f, int m, const std::vector<int>& c1,
                        const std::vector<int>& c2) {
  require(f.is_product(), "box norm needs a product grid");
  const int d1 = f.d1(), d2 = f.d2();
  require(static_cast<int>(c1.size()) == d1 && static_cast<int>(c2.size()) == d2,
          "window corners must match the product factors");
  const int N1 = static_cast<int>(ipow(m, d1)), N2 = static_cast<int>(ipow(m, d2));
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N1, N2);
  int ix[kMaxDim];
  for (int r = 0; r < N1; ++r) {
    unflatten(r, d1, m, ix);
    for (int a = 0; a < d1; ++a) ix[a] += c1[a];
    for (int c = 0; c < N2; ++c) {
      unflatten(c, d2, m, ix + d1);
      for (int a = 0; a < d2; ++a) ix[d1 + a] += c2[a];
      F(r, c) = f.at(ix);
    }
  }
  const double G = N1 <= N2 ? (F * F.transpose()).squaredNorm() : (F.transpose() * F).squaredNorm();
  const double N12 = static_cast<double>(N1) * N2;
  return G / (N12 * N12);
}

double box_norm_window(const GridFunction& f, double L, const std::vector<int>& c1,
                       const std::vector<int>& c2) {
  check_box_args(f, L);
  return std::pow(box_norm_window4(f, window_cells(L, f.n), c1, c2), 0.25);
}

BoxField box_norm_field(const GridFunction& f, double L, int stride) {
  check_box_args(f, L);
  BoxField b;
  b.m = window_cells(L, f.n);
  b.stride = stride > 0 ? stride : std::max(1, b.m / 4);
  box_scan(f, b.m, b.stride, b.corners1, b.weights1, b.corners2, b.weights2,
           [&](std::size_t, const std::vector<double>& row) {
             b.value4.insert(b.value4.end(), row.begin(), row.end());
           });
  return b;
}

BoxNorm box_norm(const GridFunction& f, double L, int stride) {
  check_box_args(f, L);
  BoxNorm r;
  const int m = window_cells(L, f.n);
  r.L = static_cast<double>(m) / f.n;
  r.stride = stride > 0 ? stride : std::max(1, m / 4);
  std::vector<std::vector<int>> c1, c2;
  std::vector<double> w1, w2;
  double total = 0;
  box_scan(f, m, r.stride, c1, w1, c2, w2, [&](std::size_t i1, const std::vector<double>& row) {
    double acc = 0;
    for (std::size_t i2 = 0; i2 < row.size(); ++i2) acc += w2[i2] * row[i2];
    total += w1[i1] * acc;
  });
  r.fourth = total;
  if (total < -1e-10) throw Error(ErrorKind::Usage, "box norm fourth power is negative");
  r.value = std::pow(std::max(0.0, total), 0.25);
  return r;
}

double box_psi_form(const GridFunction& f, double L) {
  check_box_args(f, L);
  const int m = window_cells(L, f.n);
  const double Ls = static_cast<double>(m) / f.n;
  const ShiftKernel P = tent_kernel(f.d1(), Ls, f.h()), Q = tent_kernel(f.d2(), Ls, f.h());
  return rectangle_form(f, f, f, f, {{P, Q}})[0];
}

} // namespace gd
