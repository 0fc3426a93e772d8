/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <algorithm>
#include <cmath>
#include <map>

#include "geodensity/error.hpp"
#include "geodensity/increment.hpp"
#include "geodensity/norms.hpp"
#include "prefix.hpp"

namespace gd {

std::size_t Box::cells() const {
  std::size_t c = 1;
  for (int e : ext) c *= static_cast<std::size_t>(e);
  return c;
}

bool Box::is_cube() const {
  return std::all_of(ext.begin(), ext.end(), [&](int e) { return e == ext[0]; });
}

std::string to_string(CellKind k) {
  switch (k) {
    case CellKind::Uniform: return "U";
    case CellKind::NonUniform: return "N";
    case CellKind::Rectangle: return "R";
  }
  return "?";
}

namespace {

struct Piece {
  Box box;
  bool cube = false;  // a full child cube
};

// Per-factor state shared by one regularize run.
struct Factor {
  const GridFunction* B = nullptr;
  detail::PrefixSum sums;
  std::map<std::pair<std::vector<int>, int>, double> defects;  // (corner, scale index)

  explicit Factor(const GridFunction& b) : B(&b), sums(b) {}

  double density(const Box& q) const { return sums.box_sum(q.lo, q.ext) / static_cast<double>(q.cells()); }

  double defect(const std::vector<int>& lo, int side, double L, int scale) {
    auto key = std::make_pair(lo, scale);
    auto it = defects.find(key);
    if (it != defects.end()) return it->second;
    double v = 0;
    // Prefix-sum round-off can leave a tiny positive mass on an empty cube.
    if (sums.box_sum(lo, std::vector<int>(lo.size(), side)) > 1e-9)
      v = uniformity_defect(*B, L, CubeWindow{lo, side}).eps_min;
    defects.emplace(std::move(key), v);
    return v;
  }
};

void validate_scales(const std::vector<double>& scales, int n, double eta, bool strict,
                     std::vector<int>& cells, double& max_ratio) {
  require(eta > 0 && eta <= 1, "eta must lie in (0,1]");
  require(scales.size() >= 2, "regularization needs at least two scales");
  require(std::abs(scales[0] - 1.0) < 1e-12, "the first scale must be 1");
  cells.assign(scales.size(), 0);
  max_ratio = 0;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    if (j > 0) {
      if (!(scales[j] < 0.5 * scales[j - 1]))
        throw Error(ErrorKind::Usage, "scales must be lacunary: L_{j+1} < L_j / 2 fails at j = " +
                                          std::to_string(j - 1));
      max_ratio = std::max(max_ratio, scales[j] / scales[j - 1]);
      if (strict && scales[j] > std::ldexp(eta, -static_cast<int>(j) - 5) * scales[j - 1])
        throw Error(ErrorKind::Usage, "scale ratio violates L_{j+1} <= 2^{-(j+6)} eta L_j at j = " +
                                          std::to_string(j - 1));
    }
    const double c = scales[j] * n;
    cells[j] = static_cast<int>(std::lround(c));
    require_resolved(c >= 1 - 1e-9, "scale " + std::to_string(scales[j]) + " is below one cell");
    require(std::abs(c - cells[j]) < 1e-9, "scales must be whole multiples of the cell size");
  }
}

void classify(Cell& c, Factor& f1, Factor& f2, const ScalePartition& p) {
  const std::size_t next = static_cast<std::size_t>(c.scale) + 1;
  require(next < p.scales.size(), "scale list exhausted: no scale to classify cells of side L_" +
                                      std::to_string(c.scale));
  const int side = p.scale_cells[c.scale];
  c.defect1 = f1.defect(c.q1.lo, side, p.scales[next], c.scale);
  c.defect2 = f2.defect(c.q2.lo, side, p.scales[next], c.scale);
  c.kind = c.defect1 <= p.eta && c.defect2 <= p.eta ? CellKind::Uniform : CellKind::NonUniform;
}

struct ShiftChoice {
  std::vector<int> shift;
  double captured = 0;
};

// Children of side l inside the cube (lo, s) for the given shift.
std::vector<std::vector<int>> child_corners(const std::vector<int>& lo, int s, int l,
                                            const std::vector<int>& o) {
  const int d = static_cast<int>(lo.size());
  std::vector<int> count(d);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    count[a] = (s - o[a]) / l;
    total *= static_cast<std::size_t>(std::max(0, count[a]));
  }
  std::vector<std::vector<int>> out;
  out.reserve(total);
  std::vector<int> k(d, 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::vector<int> c(d);
    for (int a = 0; a < d; ++a) c[a] = lo[a] + o[a] + k[a] * l;
    out.push_back(std::move(c));
    for (int a = d - 1; a >= 0; --a) {
      if (++k[a] < count[a]) break;
      k[a] = 0;
    }
  }
  return out;
}

ShiftChoice best_shift(const Factor& f, const Box& q, int l, double eta) {
  const int d = static_cast<int>(q.lo.size());
  const int s = q.ext[0];
  const double dq = f.density(q);
  ShiftChoice best;
  long best_count = -1;
  double best_var = -1;
  std::vector<int> o(d, 0);
  const std::vector<int> ext(d, l);
  while (true) {
    long captured = 0;
    double var = 0;
    const auto kids = child_corners(q.lo, s, l, o);
    for (const auto& c : kids) {
      const double dev = f.sums.box_sum(c, ext) / std::pow(static_cast<double>(l), d) - dq;
      if (std::abs(dev) >= 0.5 * eta) ++captured;
      var += dev * dev;
    }
    if (captured > best_count || (captured == best_count && var > best_var + 1e-15)) {
      best_count = captured;
      best_var = var;
      best.shift = o;
      best.captured = kids.empty() ? 0.0 : static_cast<double>(captured) / static_cast<double>(kids.size());
    }
    int a = d - 1;
    while (a >= 0 && ++o[a] == l) {
      o[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return best;
}

// Splits the cube q along the shift into full child cubes and partial boxes.
std::vector<Piece> split_cube(const Box& q, int l, const std::vector<int>& o) {
  const int d = static_cast<int>(q.lo.size());
  const int s = q.ext[0];
  // Per-axis intervals: (start, length, full).
  std::vector<std::vector<std::array<int, 3>>> axis(d);
  for (int a = 0; a < d; ++a) {
    const int lo = q.lo[a];
    if (o[a] > 0) axis[a].push_back({lo, o[a], 0});
    const int k = (s - o[a]) / l;
    for (int i = 0; i < k; ++i) axis[a].push_back({lo + o[a] + i * l, l, 1});
    const int rest = s - o[a] - k * l;
    if (rest > 0) axis[a].push_back({lo + o[a] + k * l, rest, 0});
  }
  std::vector<Piece> out;
  std::vector<std::size_t> k(d, 0);
  while (true) {
    Piece p;
    p.box.lo.resize(d);
    p.box.ext.resize(d);
    p.cube = true;
    for (int a = 0; a < d; ++a) {
      const auto& iv = axis[a][k[a]];
      p.box.lo[a] = iv[0];
      p.box.ext[a] = iv[1];
      p.cube = p.cube && iv[2] == 1;
    }
    out.push_back(std::move(p));
    int a = d - 1;
    while (a >= 0 && ++k[a] == axis[a].size()) {
      k[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

double cell_energy_term(const Cell& c) { return (c.delta1 * c.delta1 + c.delta2 * c.delta2) * c.measure; }

void summarize(ScalePartition& p) {
  p.n_mass = p.r_mass = p.energy = 0;
  for (const auto& c : p.cells) {
    if (c.kind == CellKind::NonUniform) p.n_mass += c.measure;
    if (c.kind == CellKind::Rectangle) p.r_mass += c.measure;
    p.energy += 0.5 * cell_energy_term(c);
  }
}

void check_pair(const GridFunction& B1, const GridFunction& B2) {
  require(B1.n == B2.n, "B1 and B2 need the same resolution");
  require(B1.d + B2.d <= kMaxDim, "product dimension exceeds the limit");
  for (const auto* B : {&B1, &B2})
    for (double x : B->v) require(x >= -1e-12 && x <= 1 + 1e-12, "B1, B2 must take values in [0,1]");
}

ScalePartition refine_impl(const ScalePartition& p, Factor& f1, Factor& f2) {
  ScalePartition out = p;
  out.cells.clear();
  out.rounds = p.rounds + 1;
  const double h1 = std::pow(1.0 / p.n, p.d1), h2 = std::pow(1.0 / p.n, p.d2);
  for (const auto& c : p.cells) {
    if (c.kind != CellKind::NonUniform) {
      out.cells.push_back(c);
      continue;
    }
    const int j = c.scale;
    require(static_cast<std::size_t>(j) + 2 < p.scales.size(),
            "scale list exhausted: children of side L_" + std::to_string(j + 1) +
                " cannot be classified");
    const int s = p.scale_cells[j], l = p.scale_cells[j + 1];
    RefineAudit audit;
    audit.round = out.rounds;
    audit.measure = c.measure;
    audit.nonuniform = {c.defect1 > p.eta, c.defect2 > p.eta};
    audit.defective = audit.nonuniform[0] || audit.nonuniform[1];

    std::array<std::vector<Piece>, 2> pieces;
    std::array<std::vector<double>, 2> dens, defect;
    std::array<Factor*, 2> fac = {&f1, &f2};
    std::array<const Box*, 2> q = {&c.q1, &c.q2};
    for (int i = 0; i < 2; ++i) {
      std::vector<int> o(q[i]->lo.size(), 0);
      if (audit.nonuniform[i]) {
        const auto choice = best_shift(*fac[i], *q[i], l, p.eta);
        o = choice.shift;
        audit.captured[i] = choice.captured;
      }
      audit.shift[i] = o;
      pieces[i] = split_cube(*q[i], l, o);
      for (const auto& pc : pieces[i]) {
        dens[i].push_back(fac[i]->density(pc.box));
        defect[i].push_back(pc.cube ? fac[i]->defect(pc.box.lo, l, p.scales[j + 2], j + 1) : 0.0);
      }
    }

    const double e0 = c.delta1 * c.delta1 + c.delta2 * c.delta2;
    double lhs = 0, var = 0, cube_mass = 0;
    for (std::size_t a = 0; a < pieces[0].size(); ++a)
      for (std::size_t b = 0; b < pieces[1].size(); ++b) {
        Cell k;
        k.q1 = pieces[0][a].box;
        k.q2 = pieces[1][b].box;
        k.scale = j + 1;
        k.delta1 = dens[0][a];
        k.delta2 = dens[1][b];
        k.measure = static_cast<double>(k.q1.cells()) * h1 * static_cast<double>(k.q2.cells()) * h2;
        if (pieces[0][a].cube && pieces[1][b].cube) {
          k.defect1 = defect[0][a];
          k.defect2 = defect[1][b];
          k.kind = k.defect1 <= p.eta && k.defect2 <= p.eta ? CellKind::Uniform : CellKind::NonUniform;
          cube_mass += k.measure;
        } else {
          k.kind = CellKind::Rectangle;
        }
        lhs += cell_energy_term(k);
        var += ((k.delta1 - c.delta1) * (k.delta1 - c.delta1) +
                (k.delta2 - c.delta2) * (k.delta2 - c.delta2)) *
               k.measure;
        out.cells.push_back(std::move(k));
      }
    audit.identity_lhs = lhs;
    audit.identity_rhs = e0 * c.measure + var;
    audit.increment = 0.5 * (lhs - e0 * c.measure);
    audit.required = std::pow(p.eta, 4) / 128 * c.measure;
    audit.rect_mass = c.measure - cube_mass;
    audit.rect_bound = 16.0 * l / s * c.measure;
    out.audits.push_back(std::move(audit));
  }
  summarize(out);
  out.energy_trace.push_back(out.energy);
  out.n_mass_trace.push_back(out.n_mass);
  return out;
}

ScalePartition initial_impl(Factor& f1, Factor& f2, const GridFunction& B1, const GridFunction& B2,
                            const std::vector<double>& scales, double eta, const RegularizeOptions& opt) {
  check_pair(B1, B2);
  ScalePartition p;
  p.n = B1.n;
  p.d1 = B1.d;
  p.d2 = B2.d;
  p.eta = eta;
  p.scales = scales;
  validate_scales(scales, p.n, eta, opt.strict_ratio, p.scale_cells, p.max_ratio);
  Cell root;
  root.q1 = Box{std::vector<int>(p.d1, 0), std::vector<int>(p.d1, p.n)};
  root.q2 = Box{std::vector<int>(p.d2, 0), std::vector<int>(p.d2, p.n)};
  root.scale = 0;
  root.delta1 = f1.density(root.q1);
  root.delta2 = f2.density(root.q2);
  root.measure = 1.0;
  classify(root, f1, f2, p);
  p.cells.push_back(root);
  summarize(p);
  p.energy_trace.push_back(p.energy);
  p.n_mass_trace.push_back(p.n_mass);
  p.status = "initial";
  return p;
}

} // namespace

double energy(const GridFunction& B1, const GridFunction& B2, const ScalePartition& p) {
  require(B1.n == p.n && B2.n == p.n && B1.d == p.d1 && B2.d == p.d2, "partition does not match B1, B2");
  const detail::PrefixSum s1(B1), s2(B2);
  double e = 0;
  for (const auto& c : p.cells) {
    const double a = s1.box_sum(c.q1.lo, c.q1.ext) / static_cast<double>(c.q1.cells());
    const double b = s2.box_sum(c.q2.lo, c.q2.ext) / static_cast<double>(c.q2.cells());
    e += 0.5 * (a * a + b * b) * c.measure;
  }
  return e;
}

ScalePartition initial_partition(const GridFunction& B1, const GridFunction& B2,
                                 const std::vector<double>& scales, double eta,
                                 const RegularizeOptions& opt) {
  Factor f1(B1), f2(B2);
  return initial_impl(f1, f2, B1, B2, scales, eta, opt);
}

ScalePartition refine_nonuniform(const ScalePartition& p, const GridFunction& B1,
                                 const GridFunction& B2) {
  check_pair(B1, B2);
  require(B1.n == p.n && B1.d == p.d1 && B2.d == p.d2, "partition does not match B1, B2");
  Factor f1(B1), f2(B2);
  return refine_impl(p, f1, f2);
}

ScalePartition regularize(const GridFunction& B1, const GridFunction& B2,
                          const std::vector<double>& scales, double eta,
                          const RegularizeOptions& opt) {
  Factor f1(B1), f2(B2);
  ScalePartition p = initial_impl(f1, f2, B1, B2, scales, eta, opt);
  const int limit = opt.max_rounds > 0 ? opt.max_rounds
                                       : static_cast<int>(std::ceil(256.0 * std::pow(eta, -5)));
  while (true) {
    if (p.n_mass <= 0.5 * eta) {
      p.terminated = true;
      p.status = "terminated";
      break;
    }
    if (p.rounds >= limit) {
      p.status = "round-limit";
      break;
    }
    int j = 0;
    for (const auto& c : p.cells)
      if (c.kind == CellKind::NonUniform) j = std::max(j, c.scale);
    if (static_cast<std::size_t>(j) + 2 >= p.scales.size()) {
      p.status = "scales-exhausted";
      break;
    }
    p = refine_impl(p, f1, f2);
  }
  return p;
}

} // namespace gd
