/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "fft.hpp"
#include "geodensity/error.hpp"

namespace gd {

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

std::size_t flat_index(const int* idx, int d, int n) {
  std::size_t r = 0;
  for (int a = 0; a < d; ++a) r = r * n + idx[a];
  return r;
}

void unflatten(std::size_t i, int d, int n, int* idx) {
  for (int a = d - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(i % n);
    i /= n;
  }
}

GridFunction GridFunction::zeros(int d, int n, int split) {
  return constant(d, n, 0.0, split);
}

GridFunction GridFunction::constant(int d, int n, double c, int split) {
  require(d >= 1 && d <= kMaxDim, "grid dimension must lie in 1..6");
  require(n >= 1, "grid resolution must be positive");
  require(split >= 0 && split < d, "product split must lie in 0..d-1");
  GridFunction g;
  g.d = d;
  g.n = n;
  g.split = split;
  g.indicator = (c == 0.0 || c == 1.0);
  g.v.assign(ipow(n, d), c);
  return g;
}

double GridFunction::cell_volume() const { return std::pow(h(), d); }
std::size_t GridFunction::rows() const { return ipow(n, split); }
std::size_t GridFunction::cols() const { return ipow(n, d - split); }

double GridFunction::at(const int* idx) const {
  for (int a = 0; a < d; ++a)
    if (idx[a] < 0 || idx[a] >= n) return 0.0;
  return v[flat_index(idx, d, n)];
}

// ---------------------------------------------------------------- SetSpec

SetSpec SetSpec::cube(std::vector<double> center, double halfwidth) {
  SetSpec s;
  s.kind = Kind::Cube;
  s.center = std::move(center);
  s.halfwidth = {halfwidth};
  return s;
}

SetSpec SetSpec::box(std::vector<double> center, std::vector<double> halfwidths) {
  SetSpec s;
  s.kind = Kind::Cube;
  s.center = std::move(center);
  s.halfwidth = std::move(halfwidths);
  return s;
}

SetSpec SetSpec::ball(std::vector<double> center, double r) {
  SetSpec s;
  s.kind = Kind::Ball;
  s.center = std::move(center);
  s.radius = r;
  return s;
}

SetSpec SetSpec::halfspace(std::vector<double> normal, double offset) {
  SetSpec s;
  s.kind = Kind::Halfspace;
  s.normal = std::move(normal);
  s.offset = offset;
  return s;
}

SetSpec SetSpec::random(double p, double cellsize, std::uint64_t seed, int dim) {
  SetSpec s;
  s.kind = Kind::Random;
  s.p = p;
  s.cellsize = cellsize;
  s.seed = seed;
  s.dim_hint = dim;
  return s;
}

SetSpec SetSpec::product(SetSpec a, SetSpec b) {
  SetSpec s;
  s.kind = Kind::Product;
  s.children = {std::move(a), std::move(b)};
  return s;
}

SetSpec SetSpec::union_of(std::vector<SetSpec> parts) {
  SetSpec s;
  s.kind = Kind::Union;
  s.children = std::move(parts);
  return s;
}

SetSpec SetSpec::intersect(std::vector<SetSpec> parts) {
  SetSpec s;
  s.kind = Kind::Intersect;
  s.children = std::move(parts);
  return s;
}

SetSpec SetSpec::complement(SetSpec a) {
  SetSpec s;
  s.kind = Kind::Complement;
  s.children = {std::move(a)};
  return s;
}

int SetSpec::dim() const {
  switch (kind) {
    case Kind::Cube:
    case Kind::Ball:
      return static_cast<int>(center.size());
    case Kind::Halfspace:
      return static_cast<int>(normal.size());
    case Kind::Random:
      return dim_hint;
    case Kind::Product: {
      const int a = children[0].dim(), b = children[1].dim();
      return (a > 0 && b > 0) ? a + b : 0;
    }
    case Kind::Union:
    case Kind::Intersect:
    case Kind::Complement:
      for (const auto& c : children)
        if (c.dim() > 0) return c.dim();
      return 0;
  }
  return 0;
}

// ------------------------------------------------------------ rasterizing

namespace {

bool is_binary(double x) { return x == 0.0 || x == 1.0; }

// Lebesgue measure of [a,b] intersected with [lo,hi].
double overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

class Rasterizer {
public:
  Rasterizer(int d, int n) : d_(d), n_(n), h_(1.0 / n) {}

  std::vector<double> run(const SetSpec& s, int d) {
    check(s, d);
    return raster(s, d);
  }

private:
  int d_, n_;
  double h_;
  std::map<const SetSpec*, std::vector<unsigned char>> bits_;

  void check(const SetSpec& s, int d) {
    using K = SetSpec::Kind;
    const int sd = s.dim();
    if (sd > 0 && sd != d)
      throw Error(ErrorKind::Usage, "set spec dimension " + std::to_string(sd) +
                                        " does not match grid dimension " + std::to_string(d));
    switch (s.kind) {
      case K::Cube:
        require(s.halfwidth.size() == 1 || s.halfwidth.size() == s.center.size(),
                "cube halfwidth must be a scalar or one value per axis");
        for (double w : s.halfwidth) require(w >= 0, "cube halfwidth must be nonnegative");
        break;
      case K::Ball:
        require(s.radius >= 0, "ball radius must be nonnegative");
        break;
      case K::Halfspace: {
        double nn = 0;
        for (double x : s.normal) nn += x * x;
        require(nn > 0, "halfspace normal must be nonzero");
        break;
      }
      case K::Random:
        require(s.p >= 0 && s.p <= 1, "random set probability must lie in [0,1]");
        require(s.cellsize > 0 && s.cellsize <= 1, "random cellsize must lie in (0,1]");
        break;
      case K::Product: {
        require(s.children.size() == 2, "product takes exactly two factors");
        const int a = s.children[0].dim(), b = s.children[1].dim();
        require(a > 0 && b > 0, "product factors need explicit dimensions");
        require(a + b == d, "product factor dimensions must sum to the grid dimension");
        check(s.children[0], a);
        check(s.children[1], b);
        break;
      }
      case K::Union:
      case K::Intersect:
        require(!s.children.empty(), "union/intersect needs at least one part");
        for (const auto& c : s.children) check(c, d);
        break;
      case K::Complement:
        require(s.children.size() == 1, "complement takes one operand");
        check(s.children[0], d);
        break;
    }
  }

  const std::vector<unsigned char>& random_bits(const SetSpec& s, int d) {
    auto it = bits_.find(&s);
    if (it != bits_.end()) return it->second;
    const int m = std::max(1, static_cast<int>(std::lround(1.0 / s.cellsize)));
    std::vector<unsigned char> b(ipow(m, d));
    std::mt19937_64 rng(s.seed);
    for (auto& x : b) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x = u < s.p ? 1 : 0;
    }
    return bits_.emplace(&s, std::move(b)).first->second;
  }

  bool contains(const SetSpec& s, const double* x, int d) {
    using K = SetSpec::Kind;
    switch (s.kind) {
      case K::Cube:
        for (int a = 0; a < d; ++a) {
          const double w = s.halfwidth.size() == 1 ? s.halfwidth[0] : s.halfwidth[a];
          if (std::abs(x[a] - s.center[a]) > w) return false;
        }
        return true;
      case K::Ball: {
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += (x[a] - s.center[a]) * (x[a] - s.center[a]);
        return r2 <= s.radius * s.radius;
      }
      case K::Halfspace: {
        double dot = 0;
        for (int a = 0; a < d; ++a) dot += s.normal[a] * x[a];
        return dot <= s.offset;
      }
      case K::Random: {
        const auto& b = random_bits(s, d);
        const int m = std::max(1, static_cast<int>(std::lround(1.0 / s.cellsize)));
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) {
          if (x[a] < 0 || x[a] >= 1) return false;
          idx = idx * m + std::min(m - 1, static_cast<int>(x[a] * m));
        }
        return b[idx] != 0;
      }
      case K::Product: {
        const int da = s.children[0].dim();
        return contains(s.children[0], x, da) && contains(s.children[1], x + da, d - da);
      }
      case K::Union:
        for (const auto& c : s.children)
          if (contains(c, x, d)) return true;
        return false;
      case K::Intersect:
        for (const auto& c : s.children)
          if (!contains(c, x, d)) return false;
        return true;
      case K::Complement:
        return !contains(s.children[0], x, d);
    }
    return false;
  }

  // Coverage of one cell by sampling 3^d interior points.
  double supersample(const SetSpec& s, const int* idx, int d) {
    int sub[kMaxDim] = {0};
    double x[kMaxDim];
    const int total = static_cast<int>(ipow(3, d));
    int hits = 0;
    for (int t = 0; t < total; ++t) {
      int rem = t;
      for (int a = 0; a < d; ++a) {
        sub[a] = rem % 3;
        rem /= 3;
        x[a] = (idx[a] + (sub[a] + 0.5) / 3.0) * h_;
      }
      hits += contains(s, x, d) ? 1 : 0;
    }
    return static_cast<double>(hits) / total;
  }

  std::vector<double> raster(const SetSpec& s, int d) {
    using K = SetSpec::Kind;
    const std::size_t N = ipow(n_, d);
    std::vector<double> out(N, 0.0);
    int idx[kMaxDim];
    switch (s.kind) {
      case K::Cube: {
        // Separable exact overlaps.
        std::vector<std::vector<double>> ax(d, std::vector<double>(n_));
        for (int a = 0; a < d; ++a) {
          const double w = s.halfwidth.size() == 1 ? s.halfwidth[0] : s.halfwidth[a];
          for (int i = 0; i < n_; ++i)
            ax[a][i] = overlap(s.center[a] - w, s.center[a] + w, i * h_, (i + 1) * h_) / h_;
        }
        for (std::size_t i = 0; i < N; ++i) {
          unflatten(i, d, n_, idx);
          double c = 1;
          for (int a = 0; a < d; ++a) c *= ax[a][idx[a]];
          out[i] = c;
        }
        return out;
      }
      case K::Ball: {
        const double r = s.radius;
        for (std::size_t i = 0; i < N; ++i) {
          unflatten(i, d, n_, idx);
          double dmin = 0, dmax = 0;
          for (int a = 0; a < d; ++a) {
            const double lo = idx[a] * h_, hi = lo + h_, c = s.center[a];
            const double near = std::clamp(c, lo, hi);
            const double far = std::max(std::abs(c - lo), std::abs(c - hi));
            dmin += (near - c) * (near - c);
            dmax += far * far;
          }
          if (dmax <= r * r)
            out[i] = 1.0;
          else if (dmin >= r * r)
            out[i] = 0.0;
          else
            out[i] = supersample(s, idx, d);
        }
        return out;
      }
      case K::Halfspace: {
        int axis = -1, nonzero = 0;
        for (int a = 0; a < d; ++a)
          if (s.normal[a] != 0) {
            axis = a;
            ++nonzero;
          }
        if (nonzero == 1) {
          // normal[axis] * x_axis <= offset
          const double c = s.offset / s.normal[axis];
          const bool below = s.normal[axis] > 0;
          for (std::size_t i = 0; i < N; ++i) {
            unflatten(i, d, n_, idx);
            const double lo = idx[axis] * h_, hi = lo + h_;
            const double cov = below ? overlap(-1e300, c, lo, hi) : overlap(c, 1e300, lo, hi);
            out[i] = cov / h_;
          }
          return out;
        }
        for (std::size_t i = 0; i < N; ++i) {
          unflatten(i, d, n_, idx);
          double lo = 0, hi = 0;
          for (int a = 0; a < d; ++a) {
            const double x0 = idx[a] * h_, x1 = x0 + h_;
            lo += std::min(s.normal[a] * x0, s.normal[a] * x1);
            hi += std::max(s.normal[a] * x0, s.normal[a] * x1);
          }
          if (hi <= s.offset)
            out[i] = 1.0;
          else if (lo > s.offset)
            out[i] = 0.0;
          else
            out[i] = supersample(s, idx, d);
        }
        return out;
      }
      case K::Random: {
        const auto& b = random_bits(s, d);
        const int m = std::max(1, static_cast<int>(std::lround(1.0 / s.cellsize)));
        const double H = 1.0 / m;
        // Per-axis list of (coarse index, overlap fraction) for each fine cell.
        std::vector<std::vector<std::pair<int, double>>> ov(n_);
        for (int i = 0; i < n_; ++i) {
          const double lo = i * h_, hi = lo + h_;
          const int j0 = std::max(0, static_cast<int>(std::floor(lo / H)));
          const int j1 = std::min(m - 1, static_cast<int>(std::floor(hi / H)));
          for (int j = j0; j <= j1; ++j) {
            const double o = overlap(j * H, (j + 1) * H, lo, hi) / h_;
            if (o > 0) ov[i].push_back({j, o});
          }
        }
        for (std::size_t i = 0; i < N; ++i) {
          unflatten(i, d, n_, idx);
          double acc = 0;
          int pos[kMaxDim] = {0};
          while (true) {
            double w = 1;
            std::size_t ci = 0;
            for (int a = 0; a < d; ++a) {
              const auto& e = ov[idx[a]][pos[a]];
              w *= e.second;
              ci = ci * m + e.first;
            }
            acc += w * b[ci];
            int a = d - 1;
            while (a >= 0 && ++pos[a] == static_cast<int>(ov[idx[a]].size())) pos[a--] = 0;
            if (a < 0) break;
          }
          out[i] = acc;
        }
        return out;
      }
      case K::Product: {
        const int da = s.children[0].dim();
        const auto A = raster(s.children[0], da);
        const auto B = raster(s.children[1], d - da);
        std::size_t k = 0;
        for (double a : A)
          for (double bb : B) out[k++] = a * bb;
        return out;
      }
      case K::Complement: {
        out = raster(s.children[0], d);
        for (auto& x : out) x = 1.0 - x;
        return out;
      }
      case K::Union:
      case K::Intersect: {
        const bool uni = s.kind == K::Union;
        std::vector<std::vector<double>> parts;
        for (const auto& c : s.children) parts.push_back(raster(c, d));
        for (std::size_t i = 0; i < N; ++i) {
          // Exact whenever at most one operand is fractional in this cell.
          double acc = uni ? 0.0 : 1.0;
          int fractional = 0;
          bool decided = false;
          for (const auto& p : parts) {
            const double x = p[i];
            if (uni && x == 1.0) { acc = 1.0; decided = true; break; }
            if (!uni && x == 0.0) { acc = 0.0; decided = true; break; }
            if (!is_binary(x)) { ++fractional; acc = x; }
          }
          if (decided) { out[i] = acc; continue; }
          if (fractional <= 1) { out[i] = fractional ? acc : (uni ? 0.0 : 1.0); continue; }
          unflatten(i, d, n_, idx);
          out[i] = supersample(s, idx, d);
        }
        return out;
      }
    }
    return out;
  }
};

} // namespace

GridFunction make_grid_function(const SetSpec& spec, int d, int n) {
  require(d >= 1 && d <= kMaxDim, "grid dimension must lie in 1..6");
  if (n < 8)
    throw Error(ErrorKind::Resolution, "resolution too small: need n >= 8, got " + std::to_string(n));
  Rasterizer r(d, n);
  GridFunction g;
  g.d = d;
  g.n = n;
  g.indicator = true;
  g.v = r.run(spec, d);
  if (spec.kind == SetSpec::Kind::Product) g.split = spec.children[0].dim();
  return g;
}

double density(const GridFunction& f) {
  if (f.v.empty()) return 0.0;
  double s = 0;
  for (double x : f.v) s += x;
  return s / static_cast<double>(f.v.size());
}

GridFunction balanced_part(const GridFunction& a, const std::optional<GridFunction>& mask) {
  GridFunction out = a;
  out.indicator = false;
  if (!mask) {
    const double alpha = density(a);
    for (auto& x : out.v) x -= alpha;
    return out;
  }
  const GridFunction& m = *mask;
  require(m.d == a.d && m.n == a.n, "mask grid must match the set grid");
  double sa = 0, sm = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i] <= m[i] + 1e-12, "set exceeds its mask at cell " + std::to_string(i));
    sa += a[i];
    sm += m[i];
  }
  if (!(sm > 0)) throw Error(ErrorKind::Usage, "mask is empty");
  const double alpha = sa / sm;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - alpha * m[i];
  return out;
}

namespace {

// Mass of the tent L^{-2}(L-|z|)_+ on (-inf, z].
double tent_cdf(double z, double L) {
  if (z <= -L) return 0.0;
  if (z >= L) return 1.0;
  const double u = z / L;
  return u <= 0 ? 0.5 * (1 + u) * (1 + u) : 1.0 - 0.5 * (1 - u) * (1 - u);
}

// Apply a 1-D kernel (offsets -K..K) along one axis with zero extension.
void convolve_axis(std::vector<double>& v, int d, int n, int axis, const std::vector<double>& w) {
  const int K = static_cast<int>(w.size() / 2);
  const std::size_t stride = ipow(n, d - 1 - axis);
  const std::size_t outer = v.size() / (stride * n);
  std::vector<double> line(n), res(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < stride; ++s) {
      const std::size_t base = o * stride * n + s;
      for (int i = 0; i < n; ++i) line[i] = v[base + i * stride];
      for (int i = 0; i < n; ++i) {
        double acc = 0;
        const int j0 = std::max(0, i - K), j1 = std::min(n - 1, i + K);
        for (int j = j0; j <= j1; ++j) acc += w[i - j + K] * line[j];
        res[i] = acc;
      }
      for (int i = 0; i < n; ++i) v[base + i * stride] = res[i];
    }
}

} // namespace

GridFunction box_smooth(const GridFunction& f, double L) {
  const double h = f.h();
  if (L < h * (1 - 1e-12))
    throw Error(ErrorKind::Resolution, "box_smooth scale L=" + std::to_string(L) +
                                           " is below the cell size h=" + std::to_string(h));
  require(L <= 1.0, "box_smooth scale must be at most 1");
  // w[k] = mass of the tent over the cell at offset k.
  const int K = static_cast<int>(std::ceil(L / h + 0.5));
  std::vector<double> w(2 * K + 1);
  for (int k = -K; k <= K; ++k) w[k + K] = tent_cdf((k + 0.5) * h, L) - tent_cdf((k - 0.5) * h, L);
  GridFunction out = f;
  out.indicator = false;
  for (int a = 0; a < f.d; ++a) convolve_axis(out.v, f.d, f.n, a, w);
  return out;
}

// ---------------------------------------------------------- correlation

double CorrelationField::at(const int* k) const {
  std::size_t idx = 0;
  const int m = 2 * n - 1;
  for (int a = 0; a < d; ++a) {
    const int j = k[a] + n - 1;
    if (j < 0 || j >= m) return 0.0;
    idx = idx * m + j;
  }
  return values[idx];
}

double CorrelationField::interpolate(const double* z) const {
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int a = 0; a < d; ++a) {
    const double u = z[a] * n;
    base[a] = static_cast<int>(std::floor(u));
    frac[a] = u - base[a];
  }
  double acc = 0;
  int k[kMaxDim];
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1;
    for (int a = 0; a < d; ++a) {
      const int bit = (corner >> a) & 1;
      k[a] = base[a] + bit;
      w *= bit ? frac[a] : 1 - frac[a];
    }
    if (w != 0) acc += w * at(k);
  }
  return acc;
}

CorrelationField correlate(const GridFunction& f0, const GridFunction& f1) {
  require(f0.d == f1.d && f0.n == f1.n, "correlate needs matching grids");
  const int d = f0.d, n = f0.n, M = 2 * n;
  // Guard: the padded transform holds (2n)^d doubles plus its spectrum.
  const double log_size = d * std::log2(static_cast<double>(M));
  if (log_size > 27.0)
    throw Error(ErrorKind::Resolution, "correlation grid (2n)^d = 2^" + std::to_string(log_size) +
                                           " exceeds the 2^27 budget");
  const std::vector<int> dims(d, M);
  const auto F0 = fft::forward(fft::pad(f0.v, d, n, M), dims);
  const auto F1 = fft::forward(fft::pad(f1.v, d, n, M), dims);
  std::vector<fft::cplx> P(F0.size());
  for (std::size_t i = 0; i < P.size(); ++i) P[i] = F0[i] * std::conj(F1[i]);
  const auto c = fft::inverse(P, dims);

  CorrelationField cf;
  cf.d = d;
  cf.n = n;
  const int m = 2 * n - 1;
  cf.values.assign(ipow(m, d), 0.0);
  const double vol = f0.cell_volume();
  int k[kMaxDim];
  for (std::size_t i = 0; i < cf.values.size(); ++i) {
    unflatten(i, d, m, k);
    std::size_t src = 0;
    for (int a = 0; a < d; ++a) {
      const int off = k[a] - (n - 1);
      src = src * M + static_cast<std::size_t>((off + M) % M);
    }
    cf.values[i] = c[src] * vol;
  }
  return cf;
}

GridFunction restrict_to_box(const GridFunction& f, const std::vector<int>& lo, int extent) {
  require(static_cast<int>(lo.size()) == f.d, "box corner must have one entry per axis");
  require(extent >= 1, "box extent must be positive");
  GridFunction g = GridFunction::zeros(f.d, extent, f.split);
  g.indicator = f.indicator;
  int idx[kMaxDim], src[kMaxDim];
  for (std::size_t i = 0; i < g.size(); ++i) {
    unflatten(i, f.d, extent, idx);
    for (int a = 0; a < f.d; ++a) src[a] = lo[a] + idx[a];
    g[i] = f.at(src);
  }
  return g;
}

GridFunction tensor(const GridFunction& g, const GridFunction& h) {
  require(g.n == h.n, "tensor factors need the same resolution");
  require(g.d + h.d <= kMaxDim, "tensor product exceeds the dimension limit");
  GridFunction out = GridFunction::zeros(g.d + h.d, g.n, g.d);
  out.indicator = g.indicator && h.indicator;
  std::size_t k = 0;
  for (double a : g.v)
    for (double b : h.v) out[k++] = a * b;
  return out;
}

GridFunction pointwise(const GridFunction& a, const GridFunction& b) {
  require(a.d == b.d && a.n == b.n, "pointwise product needs matching grids");
  GridFunction out = a;
  out.indicator = a.indicator && b.indicator;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

} // namespace gd
