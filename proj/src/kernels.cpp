/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "geodensity/error.hpp"
#include "spectral.hpp"

namespace gd {

namespace {

constexpr int kOffsetBias = 512;  // offsets must satisfy |o| < 512

std::uint64_t pack(const int* o, int d) {
  std::uint64_t key = 0;
  for (int a = 0; a < d; ++a) key = key * (2 * kOffsetBias + 1) + static_cast<std::uint64_t>(o[a] + kOffsetBias);
  return key;
}

ShiftKernel from_map(int d, const std::map<std::uint64_t, double>& acc) {
  ShiftKernel K;
  K.d = d;
  K.offsets.reserve(acc.size() * d);
  K.weights.reserve(acc.size());
  int o[kMaxDim];
  for (const auto& [key, w] : acc) {
    if (w == 0.0) continue;
    std::uint64_t r = key;
    for (int a = d - 1; a >= 0; --a) {
      o[a] = static_cast<int>(r % (2 * kOffsetBias + 1)) - kOffsetBias;
      r /= (2 * kOffsetBias + 1);
    }
    K.offsets.insert(K.offsets.end(), o, o + d);
    K.weights.push_back(w);
  }
  return K;
}

bool nice_size(int m) {
  for (int p : {2, 3, 5, 7})
    while (m % p == 0) m /= p;
  return m == 1;
}

// Integral over [a,b] of a function that is quadratic there (3-point Gauss).
template <class F>
double gauss3(F f, double a, double b) {
  static const double x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < 3; ++i) s += w[i] * f(c + r * x[i]);
  return s * r;
}

} // namespace

int ShiftKernel::reach() const {
  int r = 0;
  for (int o : offsets) r = std::max(r, std::abs(o));
  return r;
}

double ShiftKernel::total() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

ShiftKernel kernel_from_nodes(const Quadrature& q, double h, KernelMode mode) {
  const int d = q.d;
  std::map<std::uint64_t, double> acc;
  int base[kMaxDim], o[kMaxDim];
  double frac[kMaxDim];
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double* s = q.node(i);
    for (int a = 0; a < d; ++a) {
      const double u = s[a] / h;
      require(std::abs(u) < kOffsetBias - 2, "shift kernel offset exceeds the supported range");
      if (mode == KernelMode::Nearest) {
        base[a] = static_cast<int>(std::floor(u + 0.5));
        frac[a] = 0;
      } else {
        base[a] = static_cast<int>(std::floor(u));
        frac[a] = u - base[a];
      }
    }
    if (mode == KernelMode::Nearest) {
      acc[pack(base, d)] += q.weights[i];
      continue;
    }
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = q.weights[i];
      for (int a = 0; a < d; ++a) {
        const int bit = (corner >> a) & 1;
        o[a] = base[a] + bit;
        w *= bit ? frac[a] : 1 - frac[a];
      }
      if (w != 0) acc[pack(o, d)] += w;
    }
  }
  return from_map(d, acc);
}

ShiftKernel sphere_kernel(int d, double r, double h, int budget, std::uint64_t seed,
                          KernelMode mode) {
  return kernel_from_nodes(sphere_quadrature(d, r, {}, budget, seed), h, mode);
}

ShiftKernel tent_kernel(int d, double L, double h) {
  require(L >= h * (1 - 1e-12), "tent kernel scale must be at least one cell");
  const int K = static_cast<int>(std::ceil(L / h)) + 1;
  std::vector<double> w1(2 * K + 1, 0.0);
  for (int k = -K; k <= K; ++k) {
    std::vector<double> br = {(k - 1) * h, k * h, (k + 1) * h, -L, 0.0, L};
    std::sort(br.begin(), br.end());
    auto f = [&](double z) {
      const double hat = std::max(0.0, 1.0 - std::abs(z - k * h) / h);
      const double tent = std::max(0.0, L - std::abs(z)) / (L * L);
      return hat * tent;
    };
    double s = 0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i)
      if (br[i + 1] > br[i]) s += gauss3(f, br[i], br[i + 1]);
    w1[k + K] = s;
  }
  std::map<std::uint64_t, double> acc;
  const int side = 2 * K + 1;
  const std::size_t total = ipow(side, d);
  int o[kMaxDim];
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t r = i;
    double w = 1;
    for (int a = d - 1; a >= 0; --a) {
      const int j = static_cast<int>(r % side);
      r /= side;
      o[a] = j - K;
      w *= w1[j];
    }
    if (w > 0) acc[pack(o, d)] += w;
  }
  return from_map(d, acc);
}

double kernel_pair_direct(const GridFunction& f0, const GridFunction& f1, const ShiftKernel& P) {
  require(f0.d == f1.d && f0.n == f1.n && P.d == f0.d, "kernel pair needs matching dimensions");
  const int d = f0.d, n = f0.n;
  int idx[kMaxDim], src[kMaxDim];
  double total = 0;
  for (std::size_t k = 0; k < P.size(); ++k) {
    const int* o = P.offset(k);
    double s = 0;
    for (std::size_t i = 0; i < f0.size(); ++i) {
      if (f0[i] == 0) continue;
      unflatten(i, d, n, idx);
      for (int a = 0; a < d; ++a) src[a] = idx[a] - o[a];
      s += f0[i] * f1.at(src);
    }
    total += P.weights[k] * s;
  }
  return total * f0.cell_volume();
}

int transform_size(int n, int reach) {
  int m = n + 2 * reach + 1;
  if (m % 2) ++m;
  while (!nice_size(m)) m += 2;
  return m;
}

namespace detail {

std::vector<fft::cplx> kernel_spectrum(const ShiftKernel& P, int M) {
  const int d = P.d;
  std::vector<double> grid(ipow(M, d), 0.0);
  for (std::size_t k = 0; k < P.size(); ++k) {
    const int* o = P.offset(k);
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) idx = idx * M + static_cast<std::size_t>(((o[a] % M) + M) % M);
    grid[idx] += P.weights[k];
  }
  return fft::forward(grid, std::vector<int>(d, M));
}

std::vector<fft::cplx> grid_spectrum(const GridFunction& f, int M) {
  return fft::forward(fft::pad(f.v, f.d, f.n, M), std::vector<int>(f.d, M));
}

} // namespace detail

SpectralPair kernel_pair_spectral(const GridFunction& f0, const GridFunction& f1,
                                  const ShiftKernel& P) {
  require(f0.d == f1.d && f0.n == f1.n && P.d == f0.d, "kernel pair needs matching dimensions");
  const int d = f0.d;
  const int M = transform_size(f0.n, P.reach());
  require_resolved(d * std::log2(static_cast<double>(M)) <= 27.0,
                   "transform of size " + std::to_string(M) + "^" + std::to_string(d) +
                       " exceeds the 2^27 budget");
  const auto F0 = detail::grid_spectrum(f0, M);
  const auto F1 = detail::grid_spectrum(f1, M);
  const auto Ph = detail::kernel_spectrum(P, M);
  const auto w = fft::hermitian_weights(std::vector<int>(d, M));
  double val = 0, abs_sum = 0, e0 = 0, e1 = 0;
  for (std::size_t i = 0; i < F0.size(); ++i) {
    const double ap = std::abs(Ph[i]);
    val += w[i] * (F0[i] * std::conj(F1[i]) * std::conj(Ph[i])).real();
    abs_sum += w[i] * std::abs(F0[i]) * std::abs(F1[i]) * ap;
    e0 += w[i] * std::norm(F0[i]) * ap;
    e1 += w[i] * std::norm(F1[i]) * ap;
  }
  const double scale = f0.cell_volume() / static_cast<double>(ipow(M, d));
  SpectralPair out;
  out.value = val * scale;
  out.abs_sum = abs_sum * scale;
  out.energy0 = e0 * scale;
  out.energy1 = e1 * scale;
  out.cs_bound = std::sqrt(out.energy0 * out.energy1);
  out.M = M;
  return out;
}

} // namespace gd
