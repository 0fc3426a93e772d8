/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_SRC_CHAIN_HPP
#define GEODENSITY_SRC_CHAIN_HPP

// Discretized iterated-sphere integral for a k-simplex.  An outer chain w
// fixes the realized vertices x_1..x_{k-1} (scaled by lambda, rounded to
// lattice offsets); the last vertex is left as a nearest-offset kernel on
// the intersection sphere S_{x_1..x_{k-1}}, so
//   T = sum_w weight_w * sum_j last_w(j) C_w(j),
// with C_w the correlation of G_w = f_0 prod_{i<k} f_i(. - o_{w,i}) against f_k.

#include <cstdint>
#include <vector>

#include "geodensity/grid.hpp"
#include "geodensity/kernels.hpp"
#include "geodensity/measures.hpp"

namespace gd::detail {

struct IteratedChain {
  int d = 0;
  int k = 0;
  std::vector<double> weight;
  std::vector<int> offsets;  // size() * (k-1) * d
  std::vector<ShiftKernel> last;

  std::size_t size() const { return weight.size(); }
  // Lattice offset of slot i (1 <= i < k) in chain w.
  const int* offset(std::size_t w, int i) const {
    return offsets.data() + (w * (k - 1) + (i - 1)) * d;
  }
};

// `budget` bounds the product of the per-level node counts.
IteratedChain build_iterated_chain(int d, const SimplexSpec& s, double lambda, double h,
                                   int budget, std::uint64_t seed);

// g(x) = f(x - o), zero outside the grid.
GridFunction shifted(const GridFunction& f, const int* o);

// G_w = f_0 prod_{i<k} f_i(. - o_{w,i}).
GridFunction chain_product(const std::vector<GridFunction>& fs, const IteratedChain& c,
                           std::size_t w);

// Slot permutation that moves slot `last` to the end, with the simplex
// re-based at the vertex of the new slot 0.  T is invariant under it.
void move_slot_last(std::vector<GridFunction>& fs, SimplexSpec& s, int last);

} // namespace gd::detail

#endif
