/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "geodensity/error.hpp"

namespace gd::fft {

namespace {

// The FFTW planner is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t product(const std::vector<int>& dims) {
  std::size_t p = 1;
  for (int x : dims) p *= static_cast<std::size_t>(x);
  return p;
}

struct Buffer {
  void* p = nullptr;
  explicit Buffer(std::size_t bytes) : p(fftw_malloc(std::max<std::size_t>(bytes, 16))) {
    if (!p) throw Error(ErrorKind::Resolution, "fft buffer allocation failed");
  }
  ~Buffer() { fftw_free(p); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
};

} // namespace

std::size_t half_size(const std::vector<int>& dims) {
  std::size_t p = 1;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) p *= dims[i];
  return p * (dims.back() / 2 + 1);
}

std::vector<cplx> forward_many(const std::vector<double>& in, const std::vector<int>& dims,
                               int count) {
  const std::size_t nreal = product(dims);
  const std::size_t ncplx = half_size(dims);
  Buffer rin(sizeof(double) * nreal * count);
  Buffer cout(sizeof(fftw_complex) * ncplx * count);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_many_dft_r2c(static_cast<int>(dims.size()), dims.data(), count,
                                  static_cast<double*>(rin.p), nullptr, 1,
                                  static_cast<int>(nreal),
                                  static_cast<fftw_complex*>(cout.p), nullptr, 1,
                                  static_cast<int>(ncplx), FFTW_ESTIMATE);
  }
  std::memcpy(rin.p, in.data(), sizeof(double) * nreal * count);
  fftw_execute(plan);
  std::vector<cplx> out(ncplx * count);
  std::memcpy(out.data(), cout.p, sizeof(fftw_complex) * ncplx * count);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<cplx> forward(const std::vector<double>& in, const std::vector<int>& dims) {
  return forward_many(in, dims, 1);
}

std::vector<double> inverse(const std::vector<cplx>& in, const std::vector<int>& dims) {
  const std::size_t nreal = product(dims);
  const std::size_t ncplx = half_size(dims);
  Buffer cin(sizeof(fftw_complex) * ncplx);
  Buffer rout(sizeof(double) * nreal);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(),
                             static_cast<fftw_complex*>(cin.p), static_cast<double*>(rout.p),
                             FFTW_ESTIMATE);
  }
  // c2r destroys its input, so it works on the copy.
  std::memcpy(cin.p, in.data(), sizeof(fftw_complex) * ncplx);
  fftw_execute(plan);
  std::vector<double> out(nreal);
  const double scale = 1.0 / static_cast<double>(nreal);
  const double* r = static_cast<const double*>(rout.p);
  for (std::size_t i = 0; i < nreal; ++i) out[i] = r[i] * scale;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> pad(const std::vector<double>& v, int d, int n, int M) {
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= M;
  std::vector<double> out(total, 0.0);
  if (v.empty()) return out;
  // Copy contiguous rows along the last axis.
  std::size_t rows = v.size() / n;
  std::vector<int> idx(d, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t rem = r;
    for (int a = d - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    std::size_t dst = 0;
    for (int a = 0; a < d - 1; ++a) dst = dst * M + idx[a];
    dst *= M;
    std::copy(v.begin() + r * n, v.begin() + (r + 1) * n, out.begin() + dst);
  }
  return out;
}

std::vector<double> hermitian_weights(const std::vector<int>& dims) {
  const int last = dims.back();
  const int nh = last / 2 + 1;
  std::vector<double> w(half_size(dims));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int k = static_cast<int>(i % nh);
    const bool self = (k == 0) || (last % 2 == 0 && k == last / 2);
    w[i] = self ? 1.0 : 2.0;
  }
  return w;
}

BatchPlan::BatchPlan(const std::vector<int>& dims, int count)
    : nreal_(product(dims)), ncplx_(half_size(dims)) {
  in_ = static_cast<double*>(fftw_malloc(sizeof(double) * nreal_ * count));
  out_ = static_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * ncplx_ * count));
  if (!in_ || !out_) {
    fftw_free(in_);
    fftw_free(out_);
    throw Error(ErrorKind::Resolution, "fft buffer allocation failed");
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_ = fftw_plan_many_dft_r2c(static_cast<int>(dims.size()), dims.data(), count, in_, nullptr,
                                 1, static_cast<int>(nreal_),
                                 reinterpret_cast<fftw_complex*>(out_), nullptr, 1,
                                 static_cast<int>(ncplx_), FFTW_ESTIMATE);
}

BatchPlan::~BatchPlan() {
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(in_);
  fftw_free(out_);
}

void BatchPlan::run() { fftw_execute(static_cast<fftw_plan>(plan_)); }

void set_threads(int threads) {
  // Single-threaded FFTW build; the setting is accepted and ignored.
  (void)threads;
}

} // namespace gd::fft
