/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_SRC_FFT_HPP
#define GEODENSITY_SRC_FFT_HPP

// Thin FFTW wrapper.  All transforms use FFTW_ESTIMATE plans so results are
// reproducible run to run.

#include <complex>
#include <cstddef>
#include <vector>

namespace gd::fft {

using cplx = std::complex<double>;

// Number of complex outputs of an r2c transform with the given dims.
std::size_t half_size(const std::vector<int>& dims);

// Forward r2c transform (unnormalized, e^{-2 pi i}).
std::vector<cplx> forward(const std::vector<double>& in, const std::vector<int>& dims);

// Inverse c2r transform divided by the number of real points.
std::vector<double> inverse(const std::vector<cplx>& in, const std::vector<int>& dims);

// Batched forward transform: `count` contiguous real arrays of shape dims.
std::vector<cplx> forward_many(const std::vector<double>& in, const std::vector<int>& dims,
                               int count);

// Embed an n^d grid (row-major) into the zero-padded M^d grid.
std::vector<double> pad(const std::vector<double>& v, int d, int n, int M);

// Multiplicity of each r2c output bin in a full-spectrum sum: Parseval over
// the half spectrum needs weight 2 on bins whose conjugate is not stored.
std::vector<double> hermitian_weights(const std::vector<int>& dims);

// Reusable batched r2c plan over owned buffers: fill input(), call run(),
// read output().  Rows are `count` arrays of shape dims.
class BatchPlan {
public:
  BatchPlan(const std::vector<int>& dims, int count);
  ~BatchPlan();
  BatchPlan(const BatchPlan&) = delete;
  BatchPlan& operator=(const BatchPlan&) = delete;

  double* input() { return in_; }
  const cplx* output() const { return out_; }
  std::size_t real_size() const { return nreal_; }
  std::size_t complex_size() const { return ncplx_; }
  void run();

private:
  std::size_t nreal_ = 0, ncplx_ = 0;
  double* in_ = nullptr;
  cplx* out_ = nullptr;
  void* plan_ = nullptr;
};

void set_threads(int threads);

} // namespace gd::fft

#endif
