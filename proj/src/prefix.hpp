/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_PREFIX_HPP
#define GEODENSITY_PREFIX_HPP

#include <vector>

#include "geodensity/grid.hpp"

namespace gd::detail {

// Summed-area table on (n+1)^d; box sums by inclusion-exclusion.  Boxes must
// lie inside the grid.
class PrefixSum {
 public:
  explicit PrefixSum(const GridFunction& f) : d_(f.d), n_(f.n) {
    const int m = n_ + 1;
    s_.assign(ipow(m, d_), 0.0);
    int idx[kMaxDim];
    for (std::size_t i = 0; i < f.size(); ++i) {
      unflatten(i, d_, n_, idx);
      std::size_t p = 0;
      for (int a = 0; a < d_; ++a) p = p * m + (idx[a] + 1);
      s_[p] = f.v[i];
    }
    std::size_t stride = 1;
    for (int a = d_ - 1; a >= 0; --a) {
      for (std::size_t p = 0; p < s_.size(); ++p)
        if ((p / stride) % m != 0) s_[p] += s_[p - stride];
      stride *= m;
    }
  }

  double box_sum(const std::vector<int>& lo, const std::vector<int>& ext) const {
    const int m = n_ + 1;
    double total = 0;
    for (int corner = 0; corner < (1 << d_); ++corner) {
      std::size_t p = 0;
      int sign = 1;
      for (int a = 0; a < d_; ++a) {
        const bool hi = (corner >> a) & 1;
        p = p * m + (hi ? lo[a] + ext[a] : lo[a]);
        if (!hi) sign = -sign;
      }
      total += sign * s_[p];
    }
    return total;
  }

 private:
  int d_;
  int n_;
  std::vector<double> s_;
};

} // namespace gd::detail

#endif
