/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "geodensity/error.hpp"
#include "geodensity/increment.hpp"
#include "prefix.hpp"

namespace gd {

namespace {

bool sample_pair(std::mt19937_64& rng, int d, double r, std::vector<double>& p, std::vector<double>& q) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  p.resize(d);
  q.resize(d);
  double norm = 0;
  std::vector<double> dir(d);
  for (int a = 0; a < d; ++a) {
    p[a] = u(rng);
    dir[a] = g(rng);
    norm += dir[a] * dir[a];
  }
  norm = std::sqrt(norm);
  if (norm < 1e-300) return false;
  bool ok = true;
  for (int a = 0; a < d; ++a) {
    q[a] = p[a] - r * dir[a] / norm;
    ok = ok && q[a] >= 0 && q[a] < 1;
  }
  return ok;
}

std::vector<int> cell_of(const std::vector<double>& p, int n) {
  std::vector<int> c(p.size());
  for (std::size_t a = 0; a < p.size(); ++a)
    c[a] = std::clamp(static_cast<int>(std::floor(p[a] * n)), 0, n - 1);
  return c;
}

// Scales 1, then a quarter of the previous side in whole cells, down to one cell.
std::vector<double> quarter_scales(int n) {
  std::vector<double> s{1.0};
  int cells = n;
  while (cells / 4 >= 1) {
    cells /= 4;
    s.push_back(static_cast<double>(cells) / n);
  }
  return s;
}

std::vector<double> usable_scales(const std::vector<double>& given, int n) {
  if (given.empty()) return quarter_scales(n);
  std::vector<double> s;
  for (double L : given) {
    const double c = L * n;
    if (c >= 1 - 1e-9 && std::abs(c - std::round(c)) < 1e-9) s.push_back(L);
  }
  return s;
}

GridFunction masked(const GridFunction& B, const std::vector<int>& lo, int side,
                    const std::vector<unsigned char>* mask) {
  GridFunction g = restrict_to_box(B, lo, side);
  if (mask)
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(*mask)[i]) g[i] = 0;
  return g;
}

std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> c(a);
  c.insert(c.end(), b.begin(), b.end());
  return c;
}

} // namespace

std::optional<Quadruple> extract_witness(const GridFunction& A, double lambda, double c, long budget,
                                         std::uint64_t seed, long* draws_used) {
  require(A.is_product(), "quadruple extraction needs a product grid");
  require(lambda > 0 && lambda <= 1 && c > 0 && c <= 1, "lambda and c lambda must lie in (0,1]");
  require(budget >= 1, "sampling budget must be positive");
  const int d1 = A.d1(), d2 = A.d2(), n = A.n;
  const std::size_t cols = A.cols();
  std::mt19937_64 rng(seed);
  std::vector<double> x, x2, y, y2;
  auto value = [&](const std::vector<int>& cx, const std::vector<int>& cy) {
    return A[flat_index(cx.data(), d1, n) * cols + flat_index(cy.data(), d2, n)];
  };
  for (long draw = 1; draw <= budget; ++draw) {
    const bool okx = sample_pair(rng, d1, lambda, x, x2);
    const bool oky = sample_pair(rng, d2, c * lambda, y, y2);
    if (!okx || !oky) continue;
    const auto cx = cell_of(x, n), cx2 = cell_of(x2, n), cy = cell_of(y, n), cy2 = cell_of(y2, n);
    if (value(cx, cy) >= 1 - 1e-12 && value(cx2, cy) >= 1 - 1e-12 && value(cx, cy2) >= 1 - 1e-12 &&
        value(cx2, cy2) >= 1 - 1e-12) {
      Quadruple q;
      q.x = x;
      q.x2 = x2;
      q.y = y;
      q.y2 = y2;
      q.cells = {concat(cx, cy), concat(cx2, cy), concat(cx, cy2), concat(cx2, cy2)};
      q.draws = draw;
      if (draws_used) *draws_used = draw;
      return q;
    }
  }
  if (draws_used) *draws_used = budget;
  return std::nullopt;
}

PipelineReport run_pipeline(const GridFunction& A0, const PipelineConfig& cfg) {
  require(A0.is_product(), "the pipeline needs a product grid");
  require(cfg.c > 0 && cfg.c <= 1, "c must lie in (0,1]");
  require(cfg.tau_fraction > 0 && cfg.tau_fraction < 1, "tau_fraction must lie in (0,1)");
  require(cfg.min_cells >= 2, "min_cells must be at least 2");
  std::vector<double> lambdas = cfg.lambdas;
  if (lambdas.empty())
    for (int j = 1; j <= 8; ++j) lambdas.push_back(std::ldexp(0.25, -j));
  for (std::size_t j = 1; j < lambdas.size(); ++j)
    require(lambdas[j] < lambdas[j - 1], "pipeline scales must decrease");

  PipelineReport rep;
  const int d1 = A0.d1(), d2 = A0.d2();
  GridFunction A = A0;
  GridFunction B1 = GridFunction::constant(d1, A0.n, 1.0);
  GridFunction B2 = GridFunction::constant(d2, A0.n, 1.0);
  B1.indicator = B2.indicator = true;
  rep.alpha0 = density(A);
  if (!(rep.alpha0 > 0)) throw Error(ErrorKind::Hypothesis, "A has zero density");
  rep.increment_step = cfg.increment_constant * std::pow(rep.alpha0, 32);
  rep.j_ceiling = 1 + std::ceil((1 - rep.alpha0) / rep.increment_step);

  double side = 1;  // physical side of the working cube
  std::vector<double> origin(d1 + d2, 0.0);
  const int iterations = cfg.max_iterations > 0 ? cfg.max_iterations : static_cast<int>(lambdas.size());
  rep.outcome = "scales-exhausted";

  for (int it = 0, j = 0; it < iterations && j < static_cast<int>(lambdas.size()); ++it, ++j) {
    PipelineStep step;
    step.iteration = it;
    const double beta = density(B1) * density(B2);
    step.alpha = density(A) / beta;

    // Regularize the current pair and move to the best non-sparse uniform cell.
    const auto scales = usable_scales(cfg.reg_scales, A.n);
    if (scales.size() >= 2) {
      const ScalePartition P = regularize(B1, B2, scales, cfg.eta_regularity);
      step.energy = P.energy;
      const double tau = cfg.tau_fraction * step.alpha;
      const detail::PrefixSum sa(A);
      const Cell* pick = nullptr;
      double pick_density = -1;
      bool small = false;
      for (const auto& c : P.cells) {
        if (c.kind != CellKind::Uniform) continue;
        if (c.delta1 * c.delta2 < beta * tau / 3) continue;  // sparse
        if (c.q1.ext[0] < cfg.min_cells) {
          small = true;
          continue;
        }
        const double mass = sa.box_sum(concat(c.q1.lo, c.q2.lo), concat(c.q1.ext, c.q2.ext));
        const double rd = mass / (c.delta1 * static_cast<double>(c.q1.cells()) * c.delta2 *
                                  static_cast<double>(c.q2.cells()));
        if (rd > pick_density) {
          pick_density = rd;
          pick = &c;
        }
      }
      if (!pick) {
        step.branch = "none";
        step.note = small ? "uniform cells are below the resolution floor" : "no non-sparse uniform cell";
        rep.log.push_back(step);
        rep.outcome = small ? "resolution-floor" : "inconclusive";
        return rep;
      }
      step.cell_density = pick_density;
      if (pick->q1.ext[0] < A.n) {
        const int s = pick->q1.ext[0];
        const auto q1 = pick->q1.lo, q2 = pick->q2.lo;
        const auto lo = concat(q1, q2);
        const int n_old = A.n;
        A = restrict_to_box(A, lo, s);
        B1 = masked(B1, q1, s, nullptr);
        B2 = masked(B2, q2, s, nullptr);
        for (int a = 0; a < d1 + d2; ++a) origin[a] += side * lo[a] / static_cast<double>(n_old);
        side *= static_cast<double>(s) / n_old;
      }
    } else {
      step.cell_density = step.alpha;
      step.note = "grid too coarse for a second scale; whole cube kept";
    }

    step.n = A.n;
    step.lambda = lambdas[j];
    step.lambda_local = lambdas[j] / side;
    while (step.lambda_local > 0.5 && j + 1 < static_cast<int>(lambdas.size())) {
      ++j;
      step.lambda = lambdas[j];
      step.lambda_local = lambdas[j] / side;
    }
    if (step.lambda_local > 0.5) {
      step.branch = "none";
      step.note = "remaining scales exceed the working cube";
      rep.log.push_back(step);
      rep.outcome = "scales-exhausted";
      return rep;
    }
    if (A.n < cfg.min_cells || step.lambda_local * cfg.c * A.n < 2) {
      step.branch = "none";
      step.note = "scale below two cells of the working grid";
      rep.log.push_back(step);
      rep.outcome = "resolution-floor";
      return rep;
    }

    DichotomyOptions dopt = cfg.dichotomy;
    dopt.seed = cfg.seed + static_cast<std::uint64_t>(it);
    DichotomyOutcome out;
    try {
      out = dichotomy_step(A, B1, B2, step.lambda_local, cfg.eps, cfg.c, dopt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Resolution) throw;
      step.branch = "none";
      step.note = e.what();
      rep.log.push_back(step);
      rep.outcome = "resolution-floor";
      return rep;
    }
    step.branch = to_string(out.branch);
    step.alpha = out.alpha;
    step.box_norm = out.box_norm;
    step.count = out.count;
    step.count_error = out.count_error;
    if (!out.hypotheses_met) step.note = "B1 or B2 defect above eps at the norm scale";

    if (out.branch == Branch::Certificate) {
      step.alpha_after = out.alpha;
      rep.log.push_back(step);
      rep.certificate = out.certificate;
      rep.outcome = "certificate";
      if (cfg.extract) {
        long draws = 0;
        auto q = extract_witness(A, step.lambda_local, cfg.c, cfg.witness_budget, cfg.seed, &draws);
        rep.witness_draws = draws;
        if (q) {
          // Back to physical coordinates of the original cube.
          auto map = [&](std::vector<double>& p, int off) {
            for (std::size_t a = 0; a < p.size(); ++a) p[a] = origin[off + a] + side * p[a];
          };
          map(q->x, 0);
          map(q->x2, 0);
          map(q->y, d1);
          map(q->y2, d1);
          rep.quadruple = q;
        }
      }
      return rep;
    }
    if (out.branch == Branch::Inconclusive) {
      step.alpha_after = out.alpha;
      rep.log.push_back(step);
      rep.outcome = "inconclusive";
      return rep;
    }

    const IncrementWitness& w = *out.witness;
    step.alpha_after = w.density;
    std::ostringstream note;
    note << "increment " << w.increment << " on a window of " << w.side << " cells";
    step.note += (step.note.empty() ? "" : "; ") + note.str();
    rep.log.push_back(step);

    const auto lo = concat(w.q1_lo, w.q2_lo);
    for (int a = 0; a < d1 + d2; ++a) origin[a] += side * lo[a] / static_cast<double>(A.n);
    const int n_old = A.n;
    A = restrict_to_box(A, lo, w.side);
    B1 = masked(B1, w.q1_lo, w.side, &w.b1_mask);
    B2 = masked(B2, w.q2_lo, w.side, &w.b2_mask);
    const GridFunction keep = tensor(B1, B2);
    for (std::size_t i = 0; i < A.size(); ++i) A[i] *= keep[i] > 0 ? 1.0 : 0.0;
    side *= static_cast<double>(w.side) / n_old;
    if (w.side < cfg.min_cells) {
      rep.outcome = "resolution-floor";
      return rep;
    }
  }
  return rep;
}

} // namespace gd
