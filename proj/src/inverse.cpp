/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "geodensity/counting.hpp"
#include "geodensity/error.hpp"
#include "geodensity/increment.hpp"
#include "geodensity/norms.hpp"
#include "prefix.hpp"

namespace gd {

namespace {

struct Relative {
  GridFunction F;  // (1_A - alpha 1_{B1 x B2}) / (beta1 beta2)
  double alpha = 0;
  double beta1 = 0;
  double beta2 = 0;
};

Relative relative_balanced(const GridFunction& A, const GridFunction& B1, const GridFunction& B2) {
  require(A.is_product() && A.d1() == B1.d && A.d2() == B2.d, "A must live on the product of the B grids");
  require(A.n == B1.n && A.n == B2.n, "A, B1, B2 need the same resolution");
  Relative r;
  r.beta1 = density(B1);
  r.beta2 = density(B2);
  if (!(r.beta1 > 0) || !(r.beta2 > 0)) throw Error(ErrorKind::Hypothesis, "B1 or B2 is empty");
  const std::size_t rows = A.rows(), cols = A.cols();
  for (std::size_t x = 0; x < rows; ++x)
    for (std::size_t y = 0; y < cols; ++y)
      if (A[x * cols + y] > B1[x] * B2[y] + 1e-12)
        throw Error(ErrorKind::Hypothesis, "A must lie inside B1 x B2");
  const double bb = r.beta1 * r.beta2;
  r.alpha = density(A) / bb;
  r.F = GridFunction::zeros(A.d, A.n, A.split);
  r.F.indicator = false;
  for (std::size_t x = 0; x < rows; ++x)
    for (std::size_t y = 0; y < cols; ++y)
      r.F[x * cols + y] = (A[x * cols + y] - r.alpha * B1[x] * B2[y]) / bb;
  const double mean = density(r.F);
  if (std::abs(mean) > 1e-9) throw Error(ErrorKind::Hypothesis, "relative balanced function is not balanced");
  return r;
}

// Window corners along one axis: 0, stride, ..., and n - m.
std::vector<int> axis_corners(int n, int m, int stride) {
  std::vector<int> c;
  for (int k = 0; k <= n - m; k += stride) c.push_back(k);
  if (c.back() != n - m) c.push_back(n - m);
  return c;
}

// Cell indices of a window, row-major within the window.
std::vector<std::size_t> window_cells(const std::vector<int>& lo, int m, int n) {
  const int d = static_cast<int>(lo.size());
  std::vector<std::size_t> out(ipow(m, d));
  int idx[kMaxDim];
  for (std::size_t i = 0; i < out.size(); ++i) {
    unflatten(i, d, m, idx);
    std::size_t p = 0;
    for (int a = 0; a < d; ++a) p = p * n + (lo[a] + idx[a]);
    out[i] = p;
  }
  return out;
}

struct LevelSets {
  std::vector<char> u1, v1;  // membership of U_1, V_1 within the window
  std::array<double, 4> parts = {0, 0, 0, 0};
  double mean = 0;
};

// Slice maximization, sign split and level-set thresholds on one window.
LevelSets level_sets(const Eigen::MatrixXd& M) {
  const Eigen::Index N1 = M.rows(), N2 = M.cols();
  const Eigen::MatrixXd G = (M * M.transpose()) * M;
  Eigen::Index x1 = 0, y1 = 0;
  G.cwiseAbs().maxCoeff(&x1, &y1);
  const Eigen::VectorXd g1 = M.col(y1);
  const Eigen::VectorXd g2 = M.row(x1).transpose();

  double best = -1;
  Eigen::VectorXd u, v;
  for (int s1 : {1, -1})
    for (int s2 : {1, -1}) {
      const Eigen::VectorXd a = (s1 * g1).cwiseMax(0.0);
      const Eigen::VectorXd b = (s2 * g2).cwiseMax(0.0);
      const double val = std::abs(a.dot(M * b));
      if (val > best) {
        best = val;
        u = a;
        v = b;
      }
    }

  std::vector<Eigen::Index> ro(N1), co(N2);
  std::iota(ro.begin(), ro.end(), 0);
  std::iota(co.begin(), co.end(), 0);
  std::stable_sort(ro.begin(), ro.end(), [&](auto i, auto j) { return u[i] > u[j]; });
  std::stable_sort(co.begin(), co.end(), [&](auto i, auto j) { return v[i] > v[j]; });
  Eigen::Index nr = 0, nc = 0;
  while (nr < N1 && u[ro[nr]] > 0) ++nr;
  while (nc < N2 && v[co[nc]] > 0) ++nc;

  LevelSets out;
  out.u1.assign(N1, 0);
  out.v1.assign(N2, 0);
  Eigen::Index bi = 0, bj = 0;
  if (nr > 0 && nc > 0) {
    // S(i, j): sum of M over the top-i rows and top-j columns.
    std::vector<double> colsum(nc, 0.0);
    double bestS = -1;
    for (Eigen::Index i = 0; i < nr; ++i) {
      double run = 0;
      for (Eigen::Index j = 0; j < nc; ++j) {
        colsum[j] += M(ro[i], co[j]);
        run += colsum[j];
        if (std::abs(run) > bestS) {
          bestS = std::abs(run);
          bi = i + 1;
          bj = j + 1;
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < bi; ++i) out.u1[ro[i]] = 1;
  for (Eigen::Index j = 0; j < bj; ++j) out.v1[co[j]] = 1;
  const double norm = static_cast<double>(N1) * static_cast<double>(N2);
  for (Eigen::Index i = 0; i < N1; ++i)
    for (Eigen::Index j = 0; j < N2; ++j) {
      const int p = (out.u1[i] ? 0 : 2) + (out.v1[j] ? 0 : 1);
      out.parts[p] += M(i, j);
    }
  for (auto& x : out.parts) x /= norm;
  out.mean = M.sum() / norm;
  return out;
}

} // namespace

double witness_density(const GridFunction& A, const GridFunction& B1, const GridFunction& B2,
                       const IncrementWitness& w) {
  const int n = A.n;
  const auto r1 = window_cells(w.q1_lo, w.side, n);
  const auto r2 = window_cells(w.q2_lo, w.side, n);
  const std::size_t cols = A.cols();
  double a = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < r1.size(); ++i)
    if (w.b1_mask[i]) b1 += B1[r1[i]];
  for (std::size_t j = 0; j < r2.size(); ++j)
    if (w.b2_mask[j]) b2 += B2[r2[j]];
  for (std::size_t i = 0; i < r1.size(); ++i) {
    if (!w.b1_mask[i]) continue;
    for (std::size_t j = 0; j < r2.size(); ++j)
      if (w.b2_mask[j]) a += A[r1[i] * cols + r2[j]];
  }
  return b1 > 0 && b2 > 0 ? a / (b1 * b2) : 0.0;
}

std::optional<IncrementWitness> inverse_search(const GridFunction& A, const GridFunction& B1,
                                               const GridFunction& B2, double L, double eta,
                                               const InverseOptions& opt) {
  require(eta > 0 && eta <= 1, "eta must lie in (0,1]");
  require(opt.c > 0, "increment constant must be positive");
  const Relative rel = relative_balanced(A, B1, B2);
  const GridFunction& F = rel.F;
  if (std::all_of(F.v.begin(), F.v.end(), [](double x) { return x == 0.0; })) return std::nullopt;
  const int n = A.n, d1 = A.d1(), d2 = A.d2();
  const int m = gd::window_cells(L, n);
  const double Lsnap = static_cast<double>(m) / n;
  const int stride = opt.stride > 0 ? opt.stride : std::max(1, m / 4);
  const double threshold = opt.c * std::pow(eta, 8);

  const double norm = box_norm(F, Lsnap, stride).value;
  if (norm < eta) return std::nullopt;

  IncrementWitness w;
  w.side = m;
  w.L = Lsnap;
  w.alpha = rel.alpha;
  w.threshold = threshold;
  w.eta = eta;
  auto finish = [&](const std::vector<int>& c1, const std::vector<int>& c2, const std::vector<char>& in1,
                    const std::vector<char>& in2) {
    w.q1_lo = c1;
    w.q2_lo = c2;
    const auto r1 = window_cells(c1, m, n), r2 = window_cells(c2, m, n);
    w.b1_mask.assign(r1.size(), 0);
    w.b2_mask.assign(r2.size(), 0);
    w.b1_measure = w.b2_measure = 0;
    for (std::size_t i = 0; i < r1.size(); ++i)
      if (in1[i] && B1[r1[i]] > 0) {
        w.b1_mask[i] = 1;
        w.b1_measure += B1[r1[i]] * std::pow(1.0 / n, d1);
      }
    for (std::size_t j = 0; j < r2.size(); ++j)
      if (in2[j] && B2[r2[j]] > 0) {
        w.b2_mask[j] = 1;
        w.b2_measure += B2[r2[j]] * std::pow(1.0 / n, d2);
      }
    w.density = witness_density(A, B1, B2, w);
    w.increment = w.density - w.alpha;
  };

  // Whole-window scan.
  {
    const detail::PrefixSum sums(F);
    const auto ax = axis_corners(n, m, stride);
    const int d = d1 + d2;
    std::vector<std::size_t> k(d, 0);
    std::vector<int> lo(d), best_lo(d);
    const std::vector<int> ext(d, m);
    const double cells = std::pow(static_cast<double>(m), d);
    double best = -1e300;
    while (true) {
      for (int a = 0; a < d; ++a) lo[a] = ax[k[a]];
      const double mean = sums.box_sum(lo, ext) / cells;
      if (mean > best) {
        best = mean;
        best_lo = lo;
      }
      int a = d - 1;
      while (a >= 0 && ++k[a] == ax.size()) {
        k[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
    if (best >= threshold) {
      w.from_scan = true;
      w.score = best;
      w.window_mean = best;
      w.parts = {best, 0, 0, 0};
      finish(std::vector<int>(best_lo.begin(), best_lo.begin() + d1),
             std::vector<int>(best_lo.begin() + d1, best_lo.end()),
             std::vector<char>(ipow(m, d1), 1), std::vector<char>(ipow(m, d2), 1));
      if (w.increment > 0 && w.b1_measure > 0 && w.b2_measure > 0) return w;
    }
  }

  // Level sets on the windows with the largest box norms.
  const BoxField field = box_norm_field(F, Lsnap, stride);
  auto inside = [&](const std::vector<int>& c) {
    return std::all_of(c.begin(), c.end(), [&](int v) { return v >= 0 && v <= n - m; });
  };
  std::vector<std::pair<double, std::size_t>> ranked;
  const std::size_t T2 = field.corners2.size();
  for (std::size_t i = 0; i < field.corners1.size(); ++i) {
    if (!inside(field.corners1[i])) continue;
    for (std::size_t j = 0; j < T2; ++j)
      if (inside(field.corners2[j])) ranked.emplace_back(field.value4[i * T2 + j], i * T2 + j);
  }
  const std::size_t K = std::min<std::size_t>(ranked.size(), std::max(1, opt.candidates));
  std::partial_sort(ranked.begin(), ranked.begin() + K, ranked.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });

  std::optional<IncrementWitness> best;
  const std::size_t cols = F.cols();
  for (std::size_t r = 0; r < K; ++r) {
    const auto& c1 = field.corners1[ranked[r].second / T2];
    const auto& c2 = field.corners2[ranked[r].second % T2];
    const auto r1 = window_cells(c1, m, n), r2 = window_cells(c2, m, n);
    Eigen::MatrixXd M(r1.size(), r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i)
      for (std::size_t j = 0; j < r2.size(); ++j) M(i, j) = F[r1[i] * cols + r2[j]];
    const LevelSets ls = level_sets(M);
    const int pair = static_cast<int>(std::max_element(ls.parts.begin(), ls.parts.end()) - ls.parts.begin());
    if (best && ls.parts[pair] <= best->score) continue;
    std::vector<char> in1(ls.u1.size()), in2(ls.v1.size());
    for (std::size_t i = 0; i < in1.size(); ++i) in1[i] = (pair < 2) == (ls.u1[i] != 0);
    for (std::size_t j = 0; j < in2.size(); ++j) in2[j] = (pair % 2 == 0) == (ls.v1[j] != 0);
    w.from_scan = false;
    w.parts = ls.parts;
    w.window_mean = ls.mean;
    w.partition_residual = ls.parts[0] + ls.parts[1] + ls.parts[2] + ls.parts[3] - ls.mean;
    w.pair = pair;
    w.score = ls.parts[pair];
    finish(c1, c2, in1, in2);
    if (w.b1_measure > 0 && w.b2_measure > 0) best = w;
  }
  if (best && best->score >= threshold && best->increment > 0) return best;
  return std::nullopt;
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::Certificate: return "certificate";
    case Branch::Witness: return "witness";
    case Branch::Inconclusive: return "inconclusive";
  }
  return "?";
}

DichotomyOutcome dichotomy_step(const GridFunction& A, const GridFunction& B1,
                                const GridFunction& B2, double lambda, double eps, double c,
                                const DichotomyOptions& opt) {
  require(lambda > 0 && lambda <= 1, "lambda must lie in (0,1]");
  require(eps > 0 && eps <= 1, "eps must lie in (0,1]");
  require(c > 0 && c <= 1, "c must lie in (0,1]");
  const int n = A.n;
  DichotomyOutcome out;
  const Relative rel = relative_balanced(A, B1, B2);
  out.alpha = rel.alpha;
  out.beta1 = rel.beta1;
  out.beta2 = rel.beta2;
  const double L = std::clamp(std::pow(eps, 4) * lambda, 2.0 / n, 0.25);
  const int m = gd::window_cells(L, n);
  out.L = static_cast<double>(m) / n;
  out.defect1 = uniformity_defect(B1, out.L, CubeWindow{std::vector<int>(B1.d, 0), n}).eps_min;
  out.defect2 = uniformity_defect(B2, out.L, CubeWindow{std::vector<int>(B2.d, 0), n}).eps_min;
  out.hypotheses_met = out.defect1 <= eps && out.defect2 <= eps;
  if (opt.strict_hypotheses && !out.hypotheses_met)
    throw Error(ErrorKind::Hypothesis, "B1 or B2 is not eps-uniform at scale eps^4 lambda");

  out.box_norm = box_norm(rel.F, out.L).value;
  const double norm_thr = opt.norm_factor * std::pow(rel.alpha, 4);
  const double claim = 0.5 * std::pow(rel.alpha, 4);

  auto measure = [&]() {
    const RelativeWeights w = make_relative_weights(B1, B2);
    const GridFunction f = pointwise(A, w.nu);
    CountOptions co;
    co.budget = opt.budget;
    co.seed = opt.seed;
    const CountResult r = count_rectangle(f, f, f, f, lambda, c, co);
    out.count = r.value;
    out.count_error = r.error;
  };
  auto certify = [&](const std::string& basis) {
    CountCertificate cert;
    cert.value = out.count;
    cert.error = out.count_error;
    cert.alpha = rel.alpha;
    cert.threshold = claim;
    cert.box_norm = out.box_norm;
    cert.norm_threshold = norm_thr;
    cert.basis = basis;
    cert.claim_holds = out.count + out.count_error >= claim;
    out.certificate = cert;
    out.branch = Branch::Certificate;
  };

  if (out.box_norm <= norm_thr) {
    measure();
    certify("norm");
    return out;
  }
  if (opt.certify_by_count) {
    measure();
    if (out.count - out.count_error >= claim) {
      certify("count");
      return out;
    }
  }
  out.witness = inverse_search(A, B1, B2, out.L, std::min(1.0, out.box_norm), opt.inverse);
  out.branch = out.witness ? Branch::Witness : Branch::Inconclusive;
  return out;
}

} // namespace gd
