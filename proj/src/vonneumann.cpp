/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/vonneumann.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>

#include "chain.hpp"
#include "fft.hpp"
#include "geodensity/counting.hpp"
#include "geodensity/error.hpp"
#include "geodensity/kernels.hpp"
#include "geodensity/norms.hpp"
#include "spectral.hpp"

namespace gd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kExactTol = 1e-8;

ExactStep step(std::string name, double lhs, double rhs, bool identity = false) {
  ExactStep s;
  s.name = std::move(name);
  s.lhs = lhs;
  s.rhs = rhs;
  s.identity = identity;
  s.tol = kExactTol * std::max(std::abs(lhs), std::abs(rhs)) + 1e-15;
  s.ok = identity ? std::abs(lhs - rhs) <= s.tol : lhs <= rhs + s.tol;
  return s;
}

void finalize(InequalityReport& r) {
  r.slack = r.rhs_main + r.rhs_error - r.lhs;
  if (r.slack >= 0)
    r.verdict = Verdict::Holds;
  else if (r.slack >= -r.numeric_error)
    r.verdict = Verdict::HoldsWithinNumerics;
  else
    r.verdict = Verdict::Violated;
}

void require_bounded(const GridFunction& f, const std::string& what) {
  for (double x : f.v)
    require(std::abs(x) <= 1 + 1e-9, what + " must take values in [-1, 1]");
}

void require_same(const GridFunction& a, const GridFunction& b) {
  require(a.d == b.d && a.n == b.n && a.split == b.split, "slots must share one grid");
}

// Norm scale eps^4 lambda, clamped to [2h, 1/4]; recorded in the inputs.
double norm_scale(double lambda, double eps, int n, InequalityReport& r) {
  const double L = std::pow(eps, 4) * lambda;
  const double Lu = std::clamp(L, 2.0 / n, 0.25);
  r.inputs["L"] = L;
  r.inputs["L_used"] = static_cast<double>(window_cells(Lu, n)) / n;
  r.inputs["scale_clamped"] = Lu != L ? 1.0 : 0.0;
  return Lu;
}

void check_common(double lambda, double eps, InequalityReport& r) {
  require(lambda > 0 && lambda <= 1, "lambda must lie in (0,1]");
  require(eps > 0 && eps <= 1, "eps must lie in (0,1]");
  r.inputs["lambda"] = lambda;
  r.inputs["eps"] = eps;
}

double envelope(const GvnOptions& opt, int d, InequalityReport& r) {
  const double K = opt.K > 0 ? opt.K : default_envelope_constant(d);
  r.inputs["K"] = K;
  return K;
}

// out[y] = sum_j P(j) f[y - pad - j] on the box [0, n + 2 pad)^d.
std::vector<double> conv_direct(const GridFunction& f, const ShiftKernel& P, int pad) {
  const int d = f.d, n = f.n, E = n + 2 * pad;
  std::vector<double> out(ipow(E, d), 0.0);
  int lo[kMaxDim], hi[kMaxDim], y[kMaxDim];
  for (std::size_t q = 0; q < P.size(); ++q) {
    const int* o = P.offset(q);
    const double w = P.weights[q];
    bool empty = false;
    for (int a = 0; a < d; ++a) {
      lo[a] = std::max(0, pad + o[a]);
      hi[a] = std::min(E, pad + o[a] + n);
      if (lo[a] >= hi[a]) empty = true;
      y[a] = lo[a];
    }
    if (empty) continue;
    const int last = d - 1;
    while (true) {
      std::size_t dst = 0, src = 0;
      for (int a = 0; a < last; ++a) {
        dst = dst * E + y[a];
        src = src * n + (y[a] - pad - o[a]);
      }
      dst = dst * E + lo[last];
      src = src * n + (lo[last] - pad - o[last]);
      const int len = hi[last] - lo[last];
      for (int i = 0; i < len; ++i) out[dst + i] += w * f.v[src + i];
      int a = last - 1;
      while (a >= 0 && ++y[a] == hi[a]) {
        y[a] = lo[a];
        --a;
      }
      if (a < 0) break;
    }
  }
  return out;
}

double sum_sq(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int N, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(N, 0.0);
  w.assign(N, 0.0);
  for (int i = 0; i < N; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (N + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int l = 2; l <= N; ++l) {
        const double p2 = ((2 * l - 1) * z * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      if (N == 1) p0 = 1;
      dp = N * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
    w[i] = (b - a) / ((1 - z * z) * dp * dp);
  }
}

int default_sphere_budget(int d) { return d == 2 ? 512 : d == 3 ? 1536 : 64 << d; }

} // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::HoldsWithinNumerics: return "holds-within-reported-numerics";
    case Verdict::Violated: return "violated";
  }
  return "?";
}

bool InequalityReport::exact_ok() const {
  return std::all_of(exact_steps.begin(), exact_steps.end(), [](const ExactStep& s) { return s.ok; });
}

double InequalityReport::worst_exact_ratio() const {
  double worst = 0;
  for (const auto& s : exact_steps) {
    const double gap = s.identity ? std::abs(s.lhs - s.rhs) : s.lhs - s.rhs;
    worst = std::max(worst, gap / s.tol);
  }
  return worst;
}

double default_envelope_constant(int d) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  const double c_psi = kPi / std::sqrt(3.0);
  const double c_sigma = fit_sphere_decay(d).constant;
  const double K = 3 * std::sqrt(std::cbrt(c_psi) * std::pow(c_sigma, 2.0 / 3));
  cache[d] = K;
  return K;
}

// ------------------------------------------------------------- distances

InequalityReport check_gvn_distance(const GridFunction& f0, const GridFunction& f1, double lambda,
                                    double eps, double c, const GvnOptions& opt) {
  InequalityReport r;
  r.check = "gvn_distance";
  require_same(f0, f1);
  require_bounded(f0, "f0");
  require_bounded(f1, "f1");
  check_common(lambda, eps, r);
  require(c > 0 && c <= 1, "c must lie in (0,1]");
  const int d = f0.d, n = f0.n;
  const double h = f0.h();
  require_resolved(c * lambda >= 2 * h, "c lambda is below two grid cells");
  r.inputs["c"] = c;
  r.inputs["n"] = n;
  r.inputs["d"] = d;
  const double L = norm_scale(lambda, eps, n, r);
  const double K = envelope(opt, d, r);
  r.inputs["decay_constant"] = fit_sphere_decay(d).constant;

  const int budget = opt.budget > 0 ? opt.budget : default_sphere_budget(d);
  r.inputs["budget"] = budget;
  const ShiftKernel P = sphere_kernel(d, c * lambda, h, budget, opt.seed, KernelMode::Multilinear);
  const ShiftKernel Ph =
      sphere_kernel(d, c * lambda, h, std::max(16, budget / 2), opt.seed, KernelMode::Multilinear);
  const SpectralPair sp = kernel_pair_spectral(f0, f1, P);
  r.lhs = std::abs(sp.value);
  r.numeric_error = std::abs(sp.value - kernel_pair_spectral(f0, f1, Ph).value);
  if (static_cast<double>(f0.size()) * static_cast<double>(P.size()) <= 2e7)
    r.exact_steps.push_back(step("parseval_identity", sp.value, kernel_pair_direct(f0, f1, P), true));
  r.exact_steps.push_back(step("triangle_fourier", r.lhs, sp.abs_sum));
  r.exact_steps.push_back(step("cauchy_schwarz", sp.abs_sum, sp.cs_bound));

  const double u0 = u1_norm(f0, L), u1v = u1_norm(f1, L);
  r.inputs["u1_f0"] = u0;
  r.inputs["u1_f1"] = u1v;
  r.rhs_main = u0 * u1v;
  r.rhs_error = K * std::pow(c, -1.0 / 6) * std::pow(eps, 2.0 / 3);
  finalize(r);
  return r;
}

// ------------------------------------------------------------- simplices

InequalityReport check_gvn_simplex(const std::vector<GridFunction>& fs, const SimplexSpec& simplex,
                                   double lambda, double eps, SimplexVariant variant,
                                   const GvnOptions& opt) {
  InequalityReport r;
  r.check = variant == SimplexVariant::Direct ? "gvn_simplex" : "gvn_simplex_squared";
  const int k = simplex.k();
  require(static_cast<int>(fs.size()) == k + 1, "a k-simplex check needs k+1 slots");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    require_same(fs[0], fs[i]);
    require_bounded(fs[i], "slot " + std::to_string(i));
  }
  check_common(lambda, eps, r);
  const int d = fs[0].d, n = fs[0].n;
  const double h = fs[0].h();
  require(d >= k + 1, "simplex checks need d >= k+1");
  require(simplex.ambient() <= d, "simplex does not fit in the grid dimension");
  const double cD = simplex.thickness();
  require(cD > 1e-9 * simplex.max_length(), "degenerate simplex");
  require_resolved(lambda * simplex.max_length() >= 2 * h, "lambda * max|v_i| is below two grid cells");
  r.inputs["c_delta"] = cD;
  r.inputs["k"] = k;
  r.inputs["d"] = d;
  r.inputs["n"] = n;
  r.inputs["angular_path"] = d >= k + 2 ? 1.0 : 0.0;
  const double L = norm_scale(lambda, eps, n, r);
  const double K = envelope(opt, d, r);
  const int budget = opt.budget > 0 ? opt.budget : 1024;
  r.inputs["budget"] = budget;

  const SimplexSpec s = simplex.embedded(d);
  const auto chain = detail::build_iterated_chain(d, s, lambda, h, budget, opt.seed);
  const GridFunction& fk = fs[k];
  const bool squared = variant == SimplexVariant::Squared;
  const bool lattice = opt.fourier_steps || squared;
  int R = 0;
  for (const auto& P : chain.last) R = std::max(R, P.reach());

  const double vol = fs[0].cell_volume();
  double T = 0, S1 = 0, S2 = 0, S3 = 0, w2 = 0;
  std::vector<double> Tw(chain.size());
  for (std::size_t w = 0; w < chain.size(); ++w) {
    const double wt = chain.weight[w];
    const GridFunction Gp = detail::chain_product(fs, chain, w);
    const auto G = conv_direct(fk, chain.last[w], 0);
    double t = 0, a = 0;
    for (std::size_t x = 0; x < G.size(); ++x) {
      t += Gp[x] * G[x];
      a += std::abs(G[x]);
    }
    Tw[w] = t * vol;
    T += wt * Tw[w];
    S1 += wt * vol * a;
    S2 += wt * vol * sum_sq(G);
    if (lattice) S3 += wt * vol * sum_sq(conv_direct(fk, chain.last[w], R));
    w2 += wt * wt;
  }
  double var = 0;
  for (std::size_t w = 0; w < chain.size(); ++w) var += chain.weight[w] * (Tw[w] - T) * (Tw[w] - T);
  r.lhs = std::abs(T);
  r.numeric_error = chain.size() > 1 ? std::sqrt(var * w2) : 0.0;
  r.inputs["count"] = T;
  r.inputs["chains"] = static_cast<double>(chain.size());

  r.exact_steps.push_back(step("triangle", r.lhs, S1));
  r.exact_steps.push_back(step("cauchy_schwarz", S1, std::sqrt(S2)));
  if (lattice) r.exact_steps.push_back(step("extend_to_lattice", S2, S3));
  if (opt.fourier_steps) {
    const int M = transform_size(n, 2 * R);
    require_resolved(d * std::log2(static_cast<double>(M)) <= 27.0, "Plancherel transform too large");
    const auto F = detail::grid_spectrum(fk, M);
    const auto herm = fft::hermitian_weights(std::vector<int>(d, M));
    std::vector<double> I(F.size(), 0.0);
    for (std::size_t w = 0; w < chain.size(); ++w) {
      const auto Pw = detail::kernel_spectrum(chain.last[w], M);
      for (std::size_t i = 0; i < I.size(); ++i) I[i] += chain.weight[w] * std::norm(Pw[i]);
    }
    double S4 = 0;
    for (std::size_t i = 0; i < F.size(); ++i) S4 += herm[i] * std::norm(F[i]) * I[i];
    S4 *= vol / static_cast<double>(ipow(M, d));
    r.exact_steps.push_back(step("plancherel", S3, S4, true));
  }
  if (squared) {
    // sum_x G(x)^2 over Z^d = sum_{j,j'} P(j) P(j') C_kk(j' - j).
    const CorrelationField C = correlate(fk, fk);
    double pairs = 0;
    int diff[kMaxDim];
    for (std::size_t w = 0; w < chain.size(); ++w) {
      const ShiftKernel& P = chain.last[w];
      double acc = 0;
      for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = 0; j < P.size(); ++j) {
          for (int a = 0; a < d; ++a) diff[a] = P.offset(j)[a] - P.offset(i)[a];
          acc += P.weights[i] * P.weights[j] * C.at(diff);
        }
      pairs += chain.weight[w] * acc;
    }
    r.exact_steps.push_back(step("vertex_pairs", S3, pairs, true));
  }

  double best = 0;
  for (int j = 0; j <= k; ++j) {
    const double u = u1_norm(fs[j], L);
    r.inputs["u1_f" + std::to_string(j)] = u;
    if (j == 0 || u < best) {
      best = u;
      r.argmin_slot = j;
    }
  }
  if (squared) {
    r.rhs_main = std::sqrt(2 * kPi) * std::sqrt(best);
    r.rhs_error = K * std::pow(cD, -1.0 / 12) * std::pow(eps, 1.0 / 3);
  } else {
    r.rhs_main = best;
    r.rhs_error = K * std::pow(cD, -1.0 / 6) * std::pow(eps, 2.0 / 3);
  }
  finalize(r);
  return r;
}

// ------------------------------------------------ angular decomposition

namespace {

struct AngularFrame {
  Eigen::VectorXd center;
  double radius = 0;
  Eigen::VectorXd u;  // unit vector towards v_k
  Eigen::MatrixXd W;  // d x (m-1), orthonormal, orthogonal to u within the sphere's span
};

AngularFrame angular_frame(const SimplexSpec& simplex, int d) {
  const int k = simplex.k();
  require(k >= 1, "simplex needs at least one vertex");
  require(d >= k + 1, "angular decomposition needs d >= k+1");
  const SimplexSpec s = simplex.embedded(d);
  std::vector<Eigen::VectorXd> anchors(s.v.begin(), s.v.begin() + (k - 1));
  const SphereDescriptor S = intersection_sphere(d, anchors, s, k);
  require(S.radius > 0, "degenerate simplex");
  AngularFrame f;
  f.center = S.center;
  f.radius = S.radius;
  f.u = (s.v[k - 1] - S.center) / S.radius;
  const Eigen::VectorXd uf = S.frame.transpose() * f.u;
  const int m = static_cast<int>(S.frame.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(uf);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  f.W = S.frame * Q.rightCols(m - 1);
  return f;
}

// Unit nodes of S^{m-2} inside the W-span, flat (m-1 per node).
std::vector<double> subsphere_nodes(int dim, int budget, std::uint64_t seed) {
  if (dim == 1) return {1.0, -1.0};
  const Quadrature q = sphere_quadrature(dim, 1.0, {}, std::max(16, budget), seed);
  return q.nodes;
}

double decomposed_average(const AngularFrame& f, int bins, int sub_budget, std::uint64_t seed,
                          const std::function<double(const Eigen::VectorXd&)>& g, std::size_t* nodes) {
  const int dim = static_cast<int>(f.W.cols());
  std::vector<double> th, tw;
  gauss_legendre(bins, 0.0, kPi, th, tw);
  const auto sub = subsphere_nodes(dim, sub_budget, seed);
  const std::size_t S = sub.size() / dim;
  double acc = 0, wsum = 0;
  for (int b = 0; b < bins; ++b) {
    const double wt = tw[b] * std::pow(std::sin(th[b]), dim - 1);
    double avg = 0;
    for (std::size_t i = 0; i < S; ++i) {
      Eigen::Map<const Eigen::VectorXd> om(sub.data() + i * dim, dim);
      const Eigen::VectorXd x =
          f.center + f.radius * (std::cos(th[b]) * f.u + std::sin(th[b]) * (f.W * om));
      avg += g(x);
    }
    acc += wt * avg / static_cast<double>(S);
    wsum += wt;
  }
  if (nodes) *nodes = static_cast<std::size_t>(bins) * S;
  return acc / wsum;
}

} // namespace

Eigen::VectorXd rotated_vertex(const SimplexSpec& simplex, int d, double theta) {
  const AngularFrame f = angular_frame(simplex, d);
  return f.center + f.radius * (std::cos(theta) * f.u + std::sin(theta) * f.W.col(0));
}

AngularReport check_angular_decomposition(const SimplexSpec& simplex, int d, int theta_bins,
                                          int budget, std::uint64_t seed, int functions) {
  require(theta_bins >= 4, "need at least 4 angle bins");
  require(budget >= 64, "angular check budget must be at least 64");
  AngularReport rep;
  rep.d = d;
  rep.k = simplex.k();
  rep.functions = functions;
  const AngularFrame f = angular_frame(simplex, d);
  const int k = simplex.k();
  const SimplexSpec s = simplex.embedded(d);
  std::vector<Eigen::VectorXd> anchors(s.v.begin(), s.v.begin() + (k - 1));
  const SphereDescriptor S = intersection_sphere(d, anchors, s, k);
  const Quadrature full = S.quadrature(budget, seed + 7);
  const Quadrature half = S.quadrature(budget / 2, seed + 8);
  const int sub = std::max(16, budget / theta_bins);
  const int m = static_cast<int>(S.frame.cols());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0, 2 * kPi);
  bool pass = true;
  for (int t = 0; t < functions; ++t) {
    Eigen::VectorXd a(d);
    for (int i = 0; i < d; ++i) a[i] = gauss(rng) * 1.5 / f.radius;
    const double b = unif(rng);
    auto g = [&](const Eigen::VectorXd& x) { return 2 + std::cos(a.dot(x) + b); };
    // Frames of dimension >= 4 carry random nodes in groups of 2^m sign
    // flips; their error bar is the standard error over groups.
    auto direct = [&](const Quadrature& q, double* se) {
      const std::size_t group = m >= 4 ? std::size_t{1} << m : q.size();
      const std::size_t G = q.size() / group;
      double acc = 0, acc2 = 0;
      for (std::size_t b = 0; b < G; ++b) {
        double mean = 0;
        for (std::size_t i = b * group; i < (b + 1) * group; ++i)
          mean += g(Eigen::Map<const Eigen::VectorXd>(q.node(i), d));
        mean /= static_cast<double>(group);
        acc += mean;
        acc2 += mean * mean;
      }
      acc /= static_cast<double>(G);
      if (se) *se = G > 1 ? std::sqrt(std::max(0.0, acc2 / G - acc * acc) / (G - 1)) : 0.0;
      return acc;
    };
    double se = 0;
    const double Id = direct(full, &se);
    const double dir_bar = m >= 4 ? se : std::abs(Id - direct(half, nullptr));
    std::size_t nodes = 0;
    const double Ia = decomposed_average(f, theta_bins, sub, seed + 3, g, &nodes);
    const double Iah = decomposed_average(f, theta_bins / 2, std::max(16, sub / 2), seed + 4, g, nullptr);
    rep.nodes = nodes;
    const double rel = std::abs(Ia - Id) / std::abs(Id);
    const double bar = (std::abs(Ia - Iah) + dir_bar) / std::abs(Id);
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
    rep.max_error_bar = std::max(rep.max_error_bar, bar);
    if (bar > 0) rep.max_ratio = std::max(rep.max_ratio, rel / bar);
    if (!(rel <= 3 * bar || rel <= 1e-10)) pass = false;
  }

  // Chord identity on a few angles, against an independent projection.
  const Eigen::VectorXd vk = s.v[k - 1];
  double dist = vk.norm();
  if (k > 1) {
    Eigen::MatrixXd X(d, k - 1);
    for (int i = 0; i < k - 1; ++i) X.col(i) = s.v[i];
    const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(vk);
    dist = (vk - X * coef).norm();
  }
  for (double th : {0.0, kPi / 3, kPi / 2, 2.0, kPi}) {
    const Eigen::VectorXd v = rotated_vertex(simplex, d, th);
    double e = std::abs((v - vk).norm() - 2 * std::sin(th / 2) * dist);
    e = std::max(e, std::abs(v.norm() - vk.norm()));
    for (int i = 0; i < k - 1; ++i) e = std::max(e, std::abs((v - s.v[i]).norm() - (vk - s.v[i]).norm()));
    rep.max_chord_error = std::max(rep.max_chord_error, e);
  }
  rep.passed = pass && rep.max_chord_error <= 1e-10;
  return rep;
}

// ------------------------------------------------------------ rectangles

InequalityReport check_gvn_rectangle(const std::array<GridFunction, 4>& f, const GridFunction& B1,
                                     const GridFunction& B2, double lambda, double eps, double c,
                                     const GvnOptions& opt) {
  InequalityReport r;
  r.check = "gvn_rectangle";
  require(f[0].is_product(), "rectangle checks need a product grid");
  for (int i = 0; i < 4; ++i) {
    require_same(f[0], f[i]);
    require_bounded(f[i], "slot " + std::to_string(i));
  }
  check_common(lambda, eps, r);
  require(c > 0 && c <= 1, "c must lie in (0,1]");
  const int d1 = f[0].d1(), d2 = f[0].d2(), n = f[0].n;
  require(d1 >= 2 && d2 >= 2, "rectangle checks need d1, d2 >= 2");
  require(B1.d == d1 && B2.d == d2 && B1.n == n && B2.n == n, "B1, B2 must live on the factor grids");
  const double h = f[0].h();
  require_resolved(c * lambda >= 2 * h, "c lambda is below two grid cells");
  r.inputs["c"] = c;
  r.inputs["n"] = n;
  r.inputs["d1"] = d1;
  r.inputs["d2"] = d2;
  const double L = norm_scale(lambda, eps, n, r);
  const double K = envelope(opt, std::min(d1, d2), r);

  if (!(density(B1) > 0) || !(density(B2) > 0)) throw Error(ErrorKind::Hypothesis, "B1 or B2 is empty");
  const RelativeWeights rw = make_relative_weights(B1, B2);
  r.inputs["beta1"] = rw.beta1;
  r.inputs["beta2"] = rw.beta2;
  const auto u1 = uniformity_defect(B1, L), u2 = uniformity_defect(B2, L);
  r.inputs["B1_defect"] = u1.eps_min;
  r.inputs["B2_defect"] = u2.eps_min;
  r.hypotheses_met = u1.eps_min <= eps && u2.eps_min <= eps;

  std::array<GridFunction, 4> F;
  for (int i = 0; i < 4; ++i) F[i] = pointwise(f[i], rw.nu);

  const int b1 = opt.budget > 0 ? opt.budget : default_sphere_budget(d1) / 2;
  const int b2 = opt.budget > 0 ? opt.budget : default_sphere_budget(d2) / 2;
  r.inputs["budget"] = std::max(b1, b2);
  const ShiftKernel P1 = sphere_kernel(d1, lambda, h, b1, opt.seed, KernelMode::Nearest);
  const ShiftKernel P2 = sphere_kernel(d2, c * lambda, h, b2, opt.seed + 1, KernelMode::Nearest);
  const ShiftKernel P1h = sphere_kernel(d1, lambda, h, std::max(16, b1 / 2), opt.seed, KernelMode::Nearest);
  const ShiftKernel P2h =
      sphere_kernel(d2, c * lambda, h, std::max(16, b2 / 2), opt.seed + 1, KernelMode::Nearest);
  const auto vals = rectangle_form(F[0], F[1], F[2], F[3], {{P1, P2}, {P1h, P2h}});
  const double T = vals[0];
  r.lhs = std::abs(T);
  r.numeric_error = std::abs(vals[0] - vals[1]);
  r.inputs["count"] = T;

  // Slices tau(x, s) = sum_t P2(t) h^{d2} sum_y a(y) b(y - t).
  const std::size_t rows = F[0].rows(), cols = F[0].cols();
  const double hx = std::pow(h, d1);
  double Tsl = 0, A = 0, B = 0, Ea = 0, Eb = 0, worst = -1e300, scale = 0;
  GridFunction a = GridFunction::zeros(d2, n), b = GridFunction::zeros(d2, n);
  int idx[kMaxDim];
  for (std::size_t q = 0; q < P1.size(); ++q) {
    const int* o = P1.offset(q);
    const double wq = P1.weights[q] * hx;
    for (std::size_t x = 0; x < rows; ++x) {
      unflatten(x, d1, n, idx);
      bool in = true;
      std::size_t xs = 0;
      for (int ax = 0; ax < d1; ++ax) {
        const int v = idx[ax] - o[ax];
        if (v < 0 || v >= n) in = false;
        xs = xs * n + v;
      }
      if (!in) continue;
      bool any_a = false, any_b = false;
      for (std::size_t y = 0; y < cols; ++y) {
        a[y] = F[0][x * cols + y] * F[1][xs * cols + y];
        b[y] = F[2][x * cols + y] * F[3][xs * cols + y];
        any_a |= a[y] != 0;
        any_b |= b[y] != 0;
      }
      if (!any_a || !any_b) continue;
      const SpectralPair sp = kernel_pair_spectral(a, b, P2);
      Tsl += wq * sp.value;
      A += wq * std::abs(sp.value);
      B += wq * sp.cs_bound;
      Ea += wq * sp.energy0;
      Eb += wq * sp.energy1;
      worst = std::max(worst, std::abs(sp.value) - sp.cs_bound);
      scale = std::max(scale, sp.cs_bound);
    }
  }
  r.exact_steps.push_back(step("slice_identity", Tsl, T, true));
  r.exact_steps.push_back(step("triangle", r.lhs, A));
  r.exact_steps.push_back(step("parseval_cs_slices", A, B));
  if (worst > -1e300) {
    ExactStep s = step("parseval_cs_worst_slice", worst, 0.0);
    s.tol = kExactTol * scale + 1e-15;
    s.ok = worst <= s.tol;
    r.exact_steps.push_back(s);
  }
  r.exact_steps.push_back(step("cauchy_schwarz_slices", B, std::sqrt(Ea * Eb)));

  double prod = 1;
  for (int i = 0; i < 4; ++i) {
    const double v = box_norm(F[i], L).value;
    r.inputs["box_f" + std::to_string(i)] = v;
    prod *= v;
  }
  r.rhs_main = prod;
  const double inv_beta = 1.0 / (rw.beta1 * rw.beta2);
  r.rhs_error = K * inv_beta * std::pow(c, -1.0 / 24) * std::pow(eps, 1.0 / 6);
  r.inputs["rhs_error_alt"] = K * inv_beta * std::pow(c, -1.0 / 6) * std::pow(eps, 2.0 / 3);
  finalize(r);
  return r;
}

// ------------------------------------------------------ relative simplex

InequalityReport check_gvn_relative_simplex(const std::vector<GridFunction>& fs,
                                            const SimplexSpec& simplex, const GridFunction& B,
                                            double lambda, double eps, const GvnOptions& opt) {
  InequalityReport r;
  r.check = "gvn_relative_simplex";
  const int k = simplex.k();
  require(static_cast<int>(fs.size()) == k + 1, "a k-simplex check needs k+1 slots");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    require_same(fs[0], fs[i]);
    require_bounded(fs[i], "slot " + std::to_string(i));
  }
  require(B.d == fs[0].d && B.n == fs[0].n, "B must share the slot grid");
  check_common(lambda, eps, r);
  const int d = fs[0].d, n = fs[0].n;
  const double h = fs[0].h();
  require(d >= k + 1, "simplex checks need d >= k+1");
  require(simplex.ambient() <= d, "simplex does not fit in the grid dimension");
  const double cD = simplex.thickness();
  require(cD > 1e-9 * simplex.max_length(), "degenerate simplex");
  require_resolved(lambda * simplex.max_length() >= 2 * h, "lambda * max|v_i| is below two grid cells");
  const double beta = density(B);
  if (!(beta > 0)) throw Error(ErrorKind::Hypothesis, "B is empty");
  r.inputs["beta"] = beta;
  r.inputs["c_delta"] = cD;
  r.inputs["k"] = k;
  r.inputs["d"] = d;
  r.inputs["n"] = n;
  r.inputs["dimension_ok"] = d >= k + 3 ? 1.0 : 0.0;
  r.inputs["lambda_le_eps"] = lambda <= eps ? 1.0 : 0.0;
  const double L = norm_scale(lambda, eps, n, r);
  const double K = envelope(opt, d, r);
  const auto ud = uniformity_defect(B, L);
  r.inputs["B_defect"] = ud.eps_min;
  r.hypotheses_met = ud.eps_min <= eps && d >= k + 3;
  const int budget = opt.budget > 0 ? opt.budget : 1024;
  r.inputs["budget"] = budget;

  GridFunction nu = B;
  nu.indicator = false;
  for (auto& x : nu.v) x /= beta;
  std::vector<GridFunction> F(k + 1);
  for (int i = 0; i <= k; ++i) F[i] = pointwise(fs[i], nu);

  const SimplexSpec s = simplex.embedded(d);
  const auto chain = detail::build_iterated_chain(d, s, lambda, h, budget, opt.seed);
  int R = 0;
  for (const auto& P : chain.last) R = std::max(R, P.reach());
  const double vol = fs[0].cell_volume();
  const std::size_t N = F[0].size();

  double T = 0, A = 0, W = 0, Q = 0, Mg = 0, E = 0, MZ = 0, w2 = 0;
  std::vector<double> Ej(k, 0.0), Tw(chain.size());
  std::vector<GridFunction> nus(k);
  std::vector<double> tail(N);
  for (std::size_t w = 0; w < chain.size(); ++w) {
    const double wt = chain.weight[w];
    const auto G = conv_direct(F[k], chain.last[w], 0);
    const GridFunction Gp = detail::chain_product(F, chain, w);
    nus[0] = nu;
    for (int i = 1; i < k; ++i) nus[i] = detail::shifted(nu, chain.offset(w, i));
    double t = 0, a = 0, ww = 0, q = 0, mg = 0, e = 0;
    for (std::size_t x = 0; x < N; ++x) {
      double pn = 1;
      for (int i = 0; i < k; ++i) pn *= nus[i][x];
      const double g2 = G[x] * G[x];
      t += Gp[x] * G[x];
      a += pn * std::abs(G[x]);
      ww += pn;
      q += pn * g2;
      mg += g2;
      e += (pn - 1) * g2;
    }
    // E_j: [nu_j - 1] prod_{j < i < k} nu_i, accumulated from the top slot down.
    std::fill(tail.begin(), tail.end(), 1.0);
    for (int j = k - 1; j >= 0; --j) {
      double ej = 0;
      for (std::size_t x = 0; x < N; ++x) ej += (nus[j][x] - 1) * tail[x] * G[x] * G[x];
      Ej[j] += wt * vol * ej;
      for (std::size_t x = 0; x < N; ++x) tail[x] *= nus[j][x];
    }
    Tw[w] = t * vol;
    T += wt * Tw[w];
    A += wt * vol * a;
    W += wt * vol * ww;
    Q += wt * vol * q;
    Mg += wt * vol * mg;
    E += wt * vol * e;
    if (opt.fourier_steps) MZ += wt * vol * sum_sq(conv_direct(F[k], chain.last[w], R));
    w2 += wt * wt;
  }
  double var = 0;
  for (std::size_t w = 0; w < chain.size(); ++w) var += chain.weight[w] * (Tw[w] - T) * (Tw[w] - T);
  const double se = chain.size() > 1 ? std::sqrt(var * w2) : 0.0;
  r.lhs = T * T;
  r.numeric_error = 2 * std::abs(T) * se + se * se;
  r.inputs["count"] = T;
  r.inputs["chains"] = static_cast<double>(chain.size());
  double esum = 0;
  for (int j = 0; j < k; ++j) {
    r.inputs["E_" + std::to_string(j)] = Ej[j];
    esum += Ej[j];
  }
  r.inputs["E"] = E;

  r.exact_steps.push_back(step("triangle", std::abs(T), A));
  r.exact_steps.push_back(step("cauchy_schwarz", A * A, W * Q));
  r.exact_steps.push_back(step("main_plus_error", Q, Mg + E, true));
  r.exact_steps.push_back(step("telescoping", esum, E, true));
  if (opt.fourier_steps) {
    r.exact_steps.push_back(step("extend_to_lattice", Mg, MZ));
    const int M = transform_size(n, 2 * R);
    require_resolved(d * std::log2(static_cast<double>(M)) <= 27.0, "Plancherel transform too large");
    const auto Fk = detail::grid_spectrum(F[k], M);
    const auto herm = fft::hermitian_weights(std::vector<int>(d, M));
    std::vector<double> I(Fk.size(), 0.0);
    for (std::size_t w = 0; w < chain.size(); ++w) {
      const auto Pw = detail::kernel_spectrum(chain.last[w], M);
      for (std::size_t i = 0; i < I.size(); ++i) I[i] += chain.weight[w] * std::norm(Pw[i]);
    }
    double S = 0;
    for (std::size_t i = 0; i < Fk.size(); ++i) S += herm[i] * std::norm(Fk[i]) * I[i];
    S *= vol / static_cast<double>(ipow(M, d));
    r.exact_steps.push_back(step("plancherel", MZ, S, true));
  }

  double best = 0;
  for (int j = 0; j <= k; ++j) {
    const double p = psi_form(F[j], F[j], L);
    r.inputs["psi_f" + std::to_string(j)] = p;
    if (j == 0 || p < best) {
      best = p;
      r.argmin_slot = j;
    }
  }
  r.rhs_main = best;
  r.rhs_error = K * std::pow(beta, -3.0 * k - 3) * std::pow(cD, -0.5) * std::pow(eps, 0.25);
  finalize(r);
  return r;
}

} // namespace gd
