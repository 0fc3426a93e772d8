/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/counting.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "chain.hpp"
#include "geodensity/error.hpp"

namespace gd {

std::string to_string(CountMethod m) {
  switch (m) {
    case CountMethod::Fft: return "fft";
    case CountMethod::Quadrature: return "quadrature";
    case CountMethod::Brute: return "brute";
    case CountMethod::Rotation: return "rotation";
    case CountMethod::Iterated: return "iterated";
    case CountMethod::MonteCarlo: return "montecarlo";
  }
  return "unknown";
}

CountMethod parse_count_method(const std::string& s) {
  for (auto m : {CountMethod::Fft, CountMethod::Quadrature, CountMethod::Brute,
                 CountMethod::Rotation, CountMethod::Iterated, CountMethod::MonteCarlo})
    if (to_string(m) == s) return m;
  throw Error(ErrorKind::Usage, "unknown count method '" + s + "'");
}

namespace {

void require_scale(double len, double h, const std::string& what) {
  require(len > 0 && len <= 1.0, what + " must lie in (0,1]");
  require_resolved(len >= 2 * h * (1 - 1e-12),
                   what + " = " + std::to_string(len) + " is below 2h = " + std::to_string(2 * h) +
                       "; scales under two cells are not resolvable");
}

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  require(a.d == b.d && a.n == b.n && a.split == b.split, "slot grids must match");
}

struct MeanErr {
  double mean = 0;
  double stderr_ = 0;
};

MeanErr mean_and_stderr(const std::vector<double>& v) {
  MeanErr r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return r;
}

int default_distance_budget(int d) {
  if (d == 2) return 4096;
  if (d == 3) return 12288;
  return (1 << d) * 2048;
}

// sum_q w_q C(lambda s_q) with C interpolated multilinearly.
double sphere_average(const CorrelationField& cf, const Quadrature& q) {
  double acc = 0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += q.weights[i] * cf.interpolate(q.node(i));
  return acc;
}

// Lattice offsets round(lambda U v_i / h) for each vertex i = 1..k.
std::vector<int> rotated_offsets(const Eigen::MatrixXd& U, const SimplexSpec& s, double lambda,
                                 double h) {
  const int d = static_cast<int>(U.rows());
  std::vector<int> o(static_cast<std::size_t>(s.k()) * d);
  for (int i = 0; i < s.k(); ++i) {
    const Eigen::VectorXd p = U * s.v[i] * (lambda / h);
    for (int a = 0; a < d; ++a) o[i * d + a] = static_cast<int>(std::lround(p[a]));
  }
  return o;
}

// For every cell index x of an n^d grid, the index of x - o or -1.
std::vector<long> shift_map(int d, int n, const int* o) {
  const std::size_t N = ipow(n, d);
  std::vector<long> map(N);
  int idx[kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    unflatten(i, d, n, idx);
    long j = 0;
    bool in = true;
    for (int a = 0; a < d && in; ++a) {
      const int v = idx[a] - o[a];
      if (v < 0 || v >= n) in = false;
      j = j * n + v;
    }
    map[i] = in ? j : -1;
  }
  return map;
}

double simplex_rotation_value(const std::vector<GridFunction>& fs, const std::vector<int>& o) {
  const GridFunction& f0 = fs[0];
  const int d = f0.d, n = f0.n, k = static_cast<int>(fs.size()) - 1;
  std::vector<std::vector<long>> maps;
  for (int i = 1; i <= k; ++i) maps.push_back(shift_map(d, n, o.data() + (i - 1) * d));
  double acc = 0;
  for (std::size_t x = 0; x < f0.size(); ++x) {
    double p = f0[x];
    for (int i = 0; i < k && p != 0; ++i) {
      const long j = maps[i][x];
      p = j < 0 ? 0.0 : p * fs[i + 1][static_cast<std::size_t>(j)];
    }
    acc += p;
  }
  return acc * f0.cell_volume();
}

} // namespace

// ------------------------------------------------------------- distances

CountResult count_distance(const GridFunction& f0, const GridFunction& f1, double lambda,
                           const CountOptions& opt) {
  require_same_grid(f0, f1);
  const int d = f0.d;
  require(d >= 2 && d <= kMaxDim, "distance counts need 2 <= d <= 6");
  require_scale(lambda, f0.h(), "lambda");
  const int budget = opt.budget > 0 ? opt.budget : default_distance_budget(d);
  const Quadrature q = sphere_quadrature(d, lambda, {}, budget, opt.seed);

  CountResult r;
  r.method = opt.method;
  r.nodes = q.size();
  switch (opt.method) {
    case CountMethod::Fft: {
      const CorrelationField cf = correlate(f0, f1);
      if (d <= 3) {
        const Quadrature half = sphere_quadrature(d, lambda, {}, std::max(16, budget / 2), opt.seed);
        r.value = sphere_average(cf, q);
        r.error = std::abs(r.value - sphere_average(cf, half));
      } else {
        // Nodes come in groups of 2^d sign flips of one Gaussian direction.
        const std::size_t group = std::size_t{1} << d;
        std::vector<double> g(q.size() / group, 0.0);
        for (std::size_t i = 0; i < q.size(); ++i) g[i / group] += cf.interpolate(q.node(i)) / group;
        const MeanErr me = mean_and_stderr(g);
        r.value = me.mean;
        r.error = me.stderr_;
      }
      return r;
    }
    case CountMethod::Brute: {
      require(f0.n <= kBruteMaxN, "brute-force counts are limited to n <= 24");
      r.value = kernel_pair_direct(f0, f1, kernel_from_nodes(q, f0.h(), KernelMode::Multilinear));
      return r;
    }
    case CountMethod::Quadrature: {
      const ShiftKernel near = kernel_from_nodes(q, f0.h(), KernelMode::Nearest);
      const ShiftKernel lin = kernel_from_nodes(q, f0.h(), KernelMode::Multilinear);
      r.value = kernel_pair_spectral(f0, f1, near).value;
      r.error = std::abs(r.value - kernel_pair_spectral(f0, f1, lin).value);
      return r;
    }
    default:
      throw Error(ErrorKind::Usage,
                  "count_distance supports fft, brute and quadrature, not " + to_string(opt.method));
  }
}

// ------------------------------------------------------------- simplices

namespace detail {

GridFunction shifted(const GridFunction& f, const int* o) {
  GridFunction g = GridFunction::zeros(f.d, f.n, f.split);
  const auto map = shift_map(f.d, f.n, o);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (map[i] >= 0) g[i] = f[static_cast<std::size_t>(map[i])];
  return g;
}

GridFunction chain_product(const std::vector<GridFunction>& fs, const IteratedChain& c,
                           std::size_t w) {
  GridFunction g = fs[0];
  g.indicator = false;
  for (int i = 1; i < c.k; ++i) {
    const auto map = shift_map(g.d, g.n, c.offset(w, i));
    for (std::size_t x = 0; x < g.size(); ++x)
      if (g[x] != 0) g[x] = map[x] < 0 ? 0.0 : g[x] * fs[i][static_cast<std::size_t>(map[x])];
  }
  return g;
}

IteratedChain build_iterated_chain(int d, const SimplexSpec& s, double lambda, double h,
                                   int budget, std::uint64_t seed) {
  const int k = s.k();
  require(d >= k + 1, "iterated simplex chains need d >= k+1");
  IteratedChain c;
  c.d = d;
  c.k = k;
  const int per_level =
      std::max(16, static_cast<int>(std::ceil(std::pow(static_cast<double>(budget), 1.0 / k))));

  // Depth-first over levels 1..k-1, carrying anchors in simplex units.
  std::vector<Eigen::VectorXd> anchors;
  std::vector<int> offs;
  auto recurse = [&](auto&& self, int j, double w) -> void {
    const SphereDescriptor S = intersection_sphere(d, anchors, s, j);
    const Quadrature q = S.quadrature(per_level, seed + static_cast<std::uint64_t>(j));
    if (j == k) {
      Quadrature scaled = q;
      for (auto& x : scaled.nodes) x *= lambda;
      c.weight.push_back(w);
      c.offsets.insert(c.offsets.end(), offs.begin(), offs.end());
      c.last.push_back(kernel_from_nodes(scaled, h, KernelMode::Nearest));
      return;
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      Eigen::Map<const Eigen::VectorXd> y(q.node(i), d);
      anchors.push_back(y);
      for (int a = 0; a < d; ++a) offs.push_back(static_cast<int>(std::lround(y[a] * lambda / h)));
      self(self, j + 1, w * q.weights[i]);
      anchors.pop_back();
      offs.resize(offs.size() - d);
    }
  };
  recurse(recurse, 1, 1.0);
  return c;
}

void move_slot_last(std::vector<GridFunction>& fs, SimplexSpec& s, int last) {
  const int k = s.k();
  require(last >= 0 && last <= k, "slot index out of range");
  if (last == k) return;
  const int d = s.ambient();
  std::vector<int> perm(k + 1);
  for (int i = 0; i <= k; ++i) perm[i] = i;
  std::swap(perm[last], perm[k]);
  // perm[0] is the new origin.
  const Eigen::VectorXd origin = perm[0] == 0 ? Eigen::VectorXd::Zero(d) : s.v[perm[0] - 1];
  SimplexSpec t;
  std::vector<GridFunction> g(k + 1);
  g[0] = fs[perm[0]];
  for (int i = 1; i <= k; ++i) {
    const Eigen::VectorXd vi = perm[i] == 0 ? Eigen::VectorXd::Zero(d) : s.v[perm[i] - 1];
    t.v.push_back(vi - origin);
    g[i] = fs[perm[i]];
  }
  fs = std::move(g);
  s = std::move(t);
}

} // namespace detail

CountResult count_simplex(const std::vector<GridFunction>& fs, const SimplexSpec& simplex,
                          double lambda, const CountOptions& opt) {
  const int k = simplex.k();
  require(static_cast<int>(fs.size()) == k + 1, "a k-simplex count needs k+1 slots");
  for (const auto& f : fs) require_same_grid(fs[0], f);
  const int d = fs[0].d;
  require(d >= k + 1, "simplex counts need d >= k+1 (d=" + std::to_string(d) +
                          ", k=" + std::to_string(k) + ")");
  require(simplex.ambient() <= d, "simplex does not fit in the grid dimension");
  require(simplex.thickness() > 1e-9 * simplex.max_length(), "degenerate simplex");
  const double h = fs[0].h();
  require(lambda > 0 && lambda <= 1, "lambda must lie in (0,1]");
  require_scale(std::min(1.0, lambda * simplex.max_length()), h, "lambda * max|v_i|");
  const SimplexSpec s = simplex.embedded(d);

  CountResult r;
  r.method = opt.method;
  if (opt.method == CountMethod::Rotation) {
    const int R = opt.budget > 0 ? opt.budget : 256;
    const auto Us = haar_rotations(d, R, opt.seed);
    std::vector<double> vals;
    vals.reserve(R);
    for (const auto& U : Us) vals.push_back(simplex_rotation_value(fs, rotated_offsets(U, s, lambda, h)));
    const MeanErr me = mean_and_stderr(vals);
    r.value = me.mean;
    r.error = me.stderr_;
    r.rotations = R;
    return r;
  }
  if (opt.method == CountMethod::Iterated) {
    const int budget = opt.budget > 0 ? opt.budget : 4096;
    const auto chain = detail::build_iterated_chain(d, s, lambda, h, budget, opt.seed);
    std::vector<double> vals(chain.size());
    double total = 0, w2 = 0;
    std::size_t nodes = 0;
    for (std::size_t w = 0; w < chain.size(); ++w) {
      vals[w] = kernel_pair_direct(detail::chain_product(fs, chain, w), fs[k], chain.last[w]);
      total += chain.weight[w] * vals[w];
      w2 += chain.weight[w] * chain.weight[w];
      nodes += chain.last[w].size();
    }
    double var = 0;
    for (std::size_t w = 0; w < chain.size(); ++w)
      var += chain.weight[w] * (vals[w] - total) * (vals[w] - total);
    r.value = total;
    r.error = chain.size() > 1 ? std::sqrt(var * w2) : 0.0;
    if (k == 1) {
      // One chain: compare against the last sphere at half budget.
      const auto half = detail::build_iterated_chain(d, s, lambda, h, std::max(16, budget / 2), opt.seed);
      r.error = std::abs(total - kernel_pair_direct(fs[0], fs[1], half.last[0]));
    }
    r.nodes = nodes;
    return r;
  }
  throw Error(ErrorKind::Usage,
              "count_simplex supports rotation and iterated, not " + to_string(opt.method));
}

// ------------------------------------------------------------ rectangles

namespace {

void require_rectangle_slots(const GridFunction& f00, const GridFunction& f10,
                             const GridFunction& f01, const GridFunction& f11) {
  require(f00.is_product(), "rectangle counts need functions on a product grid");
  require(f00.d1() >= 2 && f00.d2() >= 2, "rectangle counts need d1, d2 >= 2");
  require_same_grid(f00, f10);
  require_same_grid(f00, f01);
  require_same_grid(f00, f11);
}

int default_factor_budget(int d) { return d == 2 ? 1024 : d == 3 ? 3072 : 4096; }

// Value of a cell-average function at a point; zero outside [0,1]^d.
double point_value(const GridFunction& f, const double* p) {
  int idx[kMaxDim];
  for (int a = 0; a < f.d; ++a) {
    if (p[a] < 0 || p[a] >= 1) return 0.0;
    idx[a] = std::min(f.n - 1, static_cast<int>(p[a] * f.n));
  }
  return f[flat_index(idx, f.d, f.n)];
}

void random_unit(std::mt19937_64& rng, int m, double* out) {
  std::normal_distribution<double> g;
  double s = 0;
  do {
    s = 0;
    for (int a = 0; a < m; ++a) {
      out[a] = g(rng);
      s += out[a] * out[a];
    }
  } while (s < 1e-300);
  s = std::sqrt(s);
  for (int a = 0; a < m; ++a) out[a] /= s;
}

} // namespace

CountResult count_rectangle(const GridFunction& f00, const GridFunction& f10,
                            const GridFunction& f01, const GridFunction& f11, double lambda,
                            double c, const CountOptions& opt) {
  require_rectangle_slots(f00, f10, f01, f11);
  require(c > 0 && c <= 1, "aspect c must lie in (0,1]");
  const double h = f00.h();
  require_scale(lambda, h, "lambda");
  require_scale(c * lambda, h, "c * lambda");
  const int d1 = f00.d1(), d2 = f00.d2();

  CountResult r;
  r.method = opt.method;
  if (opt.method == CountMethod::MonteCarlo) {
    const long N = opt.budget > 0 ? opt.budget : (1L << 20);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double s1 = 0, s2 = 0;
    double p00[kMaxDim], p10[kMaxDim], p01[kMaxDim], p11[kMaxDim], e1[kMaxDim], e2[kMaxDim];
    for (long i = 0; i < N; ++i) {
      random_unit(rng, d1, e1);
      random_unit(rng, d2, e2);
      for (int a = 0; a < d1; ++a) {
        p00[a] = p01[a] = u(rng);
        p10[a] = p11[a] = p00[a] - lambda * e1[a];
      }
      for (int b = 0; b < d2; ++b) {
        p00[d1 + b] = p10[d1 + b] = u(rng);
        p01[d1 + b] = p11[d1 + b] = p00[d1 + b] - c * lambda * e2[b];
      }
      const double v = point_value(f00, p00) * point_value(f10, p10) * point_value(f01, p01) *
                       point_value(f11, p11);
      s1 += v;
      s2 += v * v;
    }
    r.value = s1 / N;
    r.error = std::sqrt(std::max(0.0, s2 / N - r.value * r.value) / (N - 1));
    r.nodes = static_cast<std::size_t>(N);
    return r;
  }

  const int b1 = opt.budget > 0 ? opt.budget : default_factor_budget(d1);
  const int b2 = opt.budget > 0 ? opt.budget : default_factor_budget(d2);
  const Quadrature q1 = sphere_quadrature(d1, lambda, {}, b1, opt.seed);
  const Quadrature q2 = sphere_quadrature(d2, c * lambda, {}, b2, opt.seed + 1);
  const Quadrature q1h = sphere_quadrature(d1, lambda, {}, std::max(16, b1 / 2), opt.seed);
  const Quadrature q2h = sphere_quadrature(d2, c * lambda, {}, std::max(16, b2 / 2), opt.seed + 1);
  r.nodes = q1.size() * q2.size();
  const auto lin = KernelMode::Multilinear;

  switch (opt.method) {
    case CountMethod::Fft: {
      const auto v = rectangle_form(
          f00, f10, f01, f11,
          {{kernel_from_nodes(q1, h, lin), kernel_from_nodes(q2, h, lin)},
           {kernel_from_nodes(q1h, h, lin), kernel_from_nodes(q2h, h, lin)}});
      r.value = v[0];
      r.error = std::abs(v[0] - v[1]);
      return r;
    }
    case CountMethod::Brute: {
      require(f00.n <= kBruteMaxN, "brute-force counts are limited to n <= 24");
      r.value = rectangle_form_direct(f00, f10, f01, f11, kernel_from_nodes(q1, h, lin),
                                      kernel_from_nodes(q2, h, lin));
      return r;
    }
    case CountMethod::Quadrature: {
      const auto near = KernelMode::Nearest;
      const auto v = rectangle_form(
          f00, f10, f01, f11,
          {{kernel_from_nodes(q1, h, near), kernel_from_nodes(q2, h, near)},
           {kernel_from_nodes(q1, h, lin), kernel_from_nodes(q2, h, lin)}});
      r.value = v[0];
      r.error = std::abs(v[0] - v[1]);
      return r;
    }
    default:
      throw Error(ErrorKind::Usage, "count_rectangle supports fft, brute, quadrature and "
                                    "montecarlo, not " + to_string(opt.method));
  }
}

// --------------------------------------------------- products of simplices

CountResult count_product_simplices(const std::vector<std::vector<GridFunction>>& fs,
                                    const SimplexSpec& s1, const SimplexSpec& s2, double lambda,
                                    const CountOptions& opt) {
  const int k1 = s1.k(), k2 = s2.k();
  require(static_cast<int>(fs.size()) == k1 + 1, "product count needs k1+1 slot rows");
  for (const auto& row : fs)
    require(static_cast<int>(row.size()) == k2 + 1, "product count needs k2+1 slots per row");
  const GridFunction& g = fs[0][0];
  for (const auto& row : fs)
    for (const auto& f : row) require_same_grid(g, f);
  require(g.is_product(), "product counts need functions on a product grid");
  const int d1 = g.d1(), d2 = g.d2(), n = g.n;
  require(d1 >= k1 + 1 && d2 >= k2 + 1, "product counts need d_i >= k_i + 1");
  require(opt.method == CountMethod::Rotation || opt.method == CountMethod::Fft,
          "count_product_simplices only supports the rotation method");
  const double h = g.h();
  require(lambda > 0 && lambda <= 1, "lambda must lie in (0,1]");
  require_scale(std::min(1.0, lambda * s1.max_length()), h, "lambda * max|v_i|");
  require_scale(std::min(1.0, lambda * s2.max_length()), h, "lambda * max|w_j|");
  const SimplexSpec e1 = s1.embedded(d1), e2 = s2.embedded(d2);

  const int R = opt.budget > 0 ? opt.budget : 32;
  const auto U1 = haar_rotations(d1, R, opt.seed);
  const auto U2 = haar_rotations(d2, R, opt.seed + 1);
  const std::size_t rows = g.rows(), cols = g.cols();
  const int zero[kMaxDim] = {};

  std::vector<double> per_u1(R, 0.0);
  for (int a = 0; a < R; ++a) {
    const auto ox = rotated_offsets(U1[a], e1, lambda, h);
    std::vector<std::vector<long>> xm(k1 + 1);
    for (int i = 0; i <= k1; ++i) xm[i] = shift_map(d1, n, i == 0 ? zero : ox.data() + (i - 1) * d1);
    for (int b = 0; b < R; ++b) {
      const auto oy = rotated_offsets(U2[b], e2, lambda, h);
      std::vector<std::vector<long>> ym(k2 + 1);
      for (int j = 0; j <= k2; ++j)
        ym[j] = shift_map(d2, n, j == 0 ? zero : oy.data() + (j - 1) * d2);
      double acc = 0;
      for (std::size_t x = 0; x < rows; ++x)
        for (std::size_t y = 0; y < cols; ++y) {
          double p = 1;
          for (int i = 0; i <= k1 && p != 0; ++i) {
            const long xi = xm[i][x];
            if (xi < 0) {
              p = 0;
              break;
            }
            for (int j = 0; j <= k2 && p != 0; ++j) {
              const long yj = ym[j][y];
              p = yj < 0 ? 0.0 : p * fs[i][j][static_cast<std::size_t>(xi) * cols + yj];
            }
          }
          acc += p;
        }
      per_u1[a] += acc * g.cell_volume() / R;
    }
  }
  const MeanErr me = mean_and_stderr(per_u1);
  CountResult r;
  r.method = CountMethod::Rotation;
  r.value = me.mean;
  r.error = me.stderr_;
  r.rotations = R * R;
  return r;
}

// -------------------------------------------------------- relative weights

RelativeWeights make_relative_weights(const GridFunction& B1, const GridFunction& B2, int k1,
                                      int k2) {
  require(B1.n == B2.n, "B1 and B2 need the same resolution");
  require(k1 >= 1 && k2 >= 1, "simplex dimensions must be positive");
  RelativeWeights w;
  w.beta1 = density(B1);
  w.beta2 = density(B2);
  require(w.beta1 > 0, "B1 is empty");
  require(w.beta2 > 0, "B2 is empty");
  w.nu1 = B1;
  w.nu2 = B2;
  w.nu1.indicator = w.nu2.indicator = false;
  for (auto& x : w.nu1.v) x /= w.beta1;
  for (auto& x : w.nu2.v) x /= w.beta2;
  auto power = [](GridFunction f, double e) {
    for (auto& x : f.v) x = std::pow(x, e);
    return f;
  };
  w.nu = tensor(power(w.nu1, 0.5), power(w.nu2, 0.5));
  w.nu_tilde = tensor(power(w.nu1, 1.0 / (k2 + 1)), power(w.nu2, 1.0 / (k1 + 1)));
  return w;
}

} // namespace gd
