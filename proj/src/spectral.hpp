/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_SRC_SPECTRAL_HPP
#define GEODENSITY_SRC_SPECTRAL_HPP

#include <vector>

#include "fft.hpp"
#include "geodensity/kernels.hpp"

namespace gd::detail {

// Half spectrum of the kernel placed on an M^d torus (offsets taken mod M).
std::vector<fft::cplx> kernel_spectrum(const ShiftKernel& P, int M);

// Half spectrum of a zero-padded grid function.
std::vector<fft::cplx> grid_spectrum(const GridFunction& f, int M);

} // namespace gd::detail

#endif
