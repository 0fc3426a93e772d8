/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
// Dense four-slot rectangle form.  For each y-shift t in the union of the Q
// supports, U_t(x,y) = f00(x,y) f01(x,y-t) and V_t(x,y) = f10(x,y) f11(x,y-t)
// are transformed along x in batches of rows, and
//   sum_s P(s) sum_{x,y} U_t(x,y) V_t(x-s,y) = M^{-d1} Re sum_xi S_t(xi) conj(P^(xi))
// with S_t = sum_y U^_t(.,y) conj(V^_t(.,y)).  Cost is one batched transform
// pair per row per t.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "fft.hpp"
#include "geodensity/counting.hpp"
#include "geodensity/error.hpp"
#include "spectral.hpp"

namespace gd {

namespace {

std::vector<long> axis_shift_map(int d, int n, const int* o) {
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

void check_slots(const GridFunction& f00, const GridFunction& f10, const GridFunction& f01,
                 const GridFunction& f11) {
  require(f00.is_product(), "rectangle forms need a product grid");
  for (const GridFunction* f : {&f10, &f01, &f11})
    require(f->d == f00.d && f->n == f00.n && f->split == f00.split,
            "rectangle slots must share one product grid");
}

} // namespace

std::vector<double> rectangle_form(const GridFunction& f00, const GridFunction& f10,
                                   const GridFunction& f01, const GridFunction& f11,
                                   const std::vector<std::pair<ShiftKernel, ShiftKernel>>& kernels) {
  check_slots(f00, f10, f01, f11);
  const int d1 = f00.d1(), d2 = f00.d2(), n = f00.n;
  const std::size_t K = kernels.size();
  int reach = 0;
  for (const auto& [P, Q] : kernels) {
    require(P.d == d1 && Q.d == d2, "kernel dimensions must match the product factors");
    reach = std::max(reach, P.reach());
  }
  // U_t and V_t live on [0,n) per axis, so circular correlation of length
  // M >= n + reach leaves every shift |s| <= reach uncontaminated.
  const int M = transform_size(n, (reach + 1) / 2);
  require_resolved(d1 * std::log2(static_cast<double>(M)) <= 27.0,
                   "rectangle transform exceeds the 2^27 budget");
  const std::vector<int> dims(d1, M);
  const std::size_t H = fft::half_size(dims);
  std::vector<std::vector<fft::cplx>> Ph(K);
  for (std::size_t j = 0; j < K; ++j) Ph[j] = detail::kernel_spectrum(kernels[j].first, M);
  const auto herm = fft::hermitian_weights(dims);

  // Equal slot pairs make V_t = U_t, so one transform batch serves both.
  // With all four slots equal, substituting y -> y + t shows the t and -t
  // terms agree, and each pair is evaluated once.
  const bool same_uv = f10.v == f00.v && f11.v == f01.v;
  const bool symmetric_t = same_uv && f01.v == f00.v;

  // Union of t supports with per-kernel weights.
  std::map<std::vector<int>, std::vector<double>> tw;
  for (std::size_t j = 0; j < K; ++j) {
    const ShiftKernel& Q = kernels[j].second;
    for (std::size_t i = 0; i < Q.size(); ++i) {
      std::vector<int> key(Q.offset(i), Q.offset(i) + d2);
      auto& w = tw[key];
      w.resize(K, 0.0);
      w[j] += Q.weights[i];
    }
  }
  if (symmetric_t) {
    for (auto it = tw.begin(); it != tw.end();) {
      std::vector<int> neg(it->first);
      for (int& x : neg) x = -x;
      auto jt = tw.find(neg);
      if (jt != tw.end() && neg < it->first) {
        for (std::size_t j = 0; j < K; ++j) jt->second[j] += it->second[j];
        it = tw.erase(it);
      } else {
        ++it;
      }
    }
  }

  const std::size_t rows = f00.rows(), cols = f00.cols();
  // Position of each x cell inside the padded M^{d1} array.
  std::vector<std::size_t> padx(rows);
  {
    int idx[kMaxDim];
    for (std::size_t x = 0; x < rows; ++x) {
      unflatten(x, d1, n, idx);
      std::size_t p = 0;
      for (int a = 0; a < d1; ++a) p = p * M + idx[a];
      padx[x] = p;
    }
  }
  const std::size_t real = ipow(M, d1);
  const int chunk = static_cast<int>(
      std::clamp<std::size_t>((std::size_t{1} << 22) / real, 1, std::min<std::size_t>(cols, 512)));
  fft::BatchPlan pu(dims, chunk), pv(dims, chunk);
  std::fill(pu.input(), pu.input() + real * chunk, 0.0);
  std::fill(pv.input(), pv.input() + real * chunk, 0.0);

  std::vector<double> out(K, 0.0);
  std::vector<fft::cplx> S(H);
  std::vector<std::size_t> batch;
  batch.reserve(chunk);
  for (const auto& [t, qw] : tw) {
    const auto ymap = axis_shift_map(d2, n, t.data());
    std::fill(S.begin(), S.end(), fft::cplx(0, 0));
    auto flush = [&]() {
      if (batch.empty()) return;
      pu.run();
      if (!same_uv) pv.run();
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const fft::cplx* u = pu.output() + b * H;
        if (same_uv) {
          for (std::size_t xi = 0; xi < H; ++xi) S[xi] += std::norm(u[xi]);
        } else {
          const fft::cplx* v = pv.output() + b * H;
          for (std::size_t xi = 0; xi < H; ++xi) S[xi] += u[xi] * std::conj(v[xi]);
        }
      }
      batch.clear();
    };
    for (std::size_t y = 0; y < cols; ++y) {
      const long yt = ymap[y];
      if (yt < 0) continue;
      const std::size_t slot = batch.size();
      double* u = pu.input() + slot * real;
      double* v = pv.input() + slot * real;
      bool any_u = false, any_v = false;
      for (std::size_t x = 0; x < rows; ++x) {
        const std::size_t a = x * cols + y, b = x * cols + static_cast<std::size_t>(yt);
        const double uu = f00[a] * f01[b];
        u[padx[x]] = uu;
        any_u |= uu != 0;
        if (!same_uv) {
          const double vv = f10[a] * f11[b];
          v[padx[x]] = vv;
          any_v |= vv != 0;
        }
      }
      if (same_uv) any_v = any_u;
      if (!any_u || !any_v) continue;  // slot is reused by the next row
      batch.push_back(y);
      if (static_cast<int>(batch.size()) == chunk) flush();
    }
    flush();
    for (std::size_t j = 0; j < K; ++j) {
      if (qw[j] == 0) continue;
      double acc = 0;
      for (std::size_t xi = 0; xi < H; ++xi) acc += herm[xi] * (S[xi] * std::conj(Ph[j][xi])).real();
      out[j] += qw[j] * acc;
    }
  }
  const double scale = f00.cell_volume() / static_cast<double>(real);
  for (auto& x : out) x *= scale;
  return out;
}

double rectangle_form_direct(const GridFunction& f00, const GridFunction& f10,
                             const GridFunction& f01, const GridFunction& f11,
                             const ShiftKernel& P, const ShiftKernel& Q) {
  check_slots(f00, f10, f01, f11);
  const int d1 = f00.d1(), d2 = f00.d2(), n = f00.n;
  require(n <= kBruteMaxN, "direct rectangle sums are limited to n <= 24");
  require(P.d == d1 && Q.d == d2, "kernel dimensions must match the product factors");
  const std::size_t rows = f00.rows(), cols = f00.cols();
  std::vector<std::vector<long>> ymaps;
  for (std::size_t j = 0; j < Q.size(); ++j) ymaps.push_back(axis_shift_map(d2, n, Q.offset(j)));
  double total = 0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto xmap = axis_shift_map(d1, n, P.offset(i));
    for (std::size_t j = 0; j < Q.size(); ++j) {
      const auto& ymap = ymaps[j];
      double acc = 0;
      for (std::size_t x = 0; x < rows; ++x) {
        const long xs = xmap[x];
        if (xs < 0) continue;
        for (std::size_t y = 0; y < cols; ++y) {
          const long yt = ymap[y];
          if (yt < 0) continue;
          acc += f00[x * cols + y] * f10[xs * cols + y] * f01[x * cols + yt] * f11[xs * cols + yt];
        }
      }
      total += P.weights[i] * Q.weights[j] * acc;
    }
  }
  return total * f00.cell_volume();
}

} // namespace gd
