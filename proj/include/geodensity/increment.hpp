/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_INCREMENT_HPP
#define GEODENSITY_INCREMENT_HPP

// Density increment machinery on product grids: the scale-adapted
// regularity partition of a pair (B1, B2), the increment search for
// A subset B1 x B2, the count/increment dichotomy and the driver loop.
//
// Product-grid functions have split = d1; factor sets B1, B2 live on the
// factor grids with the same n.  Boxes are in cell units.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geodensity/grid.hpp"

namespace gd {

struct Box {
  std::vector<int> lo;
  std::vector<int> ext;  // per-axis extent in cells

  std::size_t cells() const;
  bool is_cube() const;
};

// ------------------------------------------------------------ regularity

enum class CellKind { Uniform, NonUniform, Rectangle };
std::string to_string(CellKind k);

struct Cell {
  Box q1, q2;
  int scale = 0;  // index into ScalePartition::scales of the cube side
  CellKind kind = CellKind::Rectangle;
  double delta1 = 0;  // relative density of B1 on q1
  double delta2 = 0;
  double defect1 = 0;  // windowed uniformity defect at the next scale (cubes only)
  double defect2 = 0;
  double measure = 0;
};

// One refined cell.  Identity: lhs = sum_children (d1^2 + d2^2)|child|,
// rhs = (d1^2 + d2^2)|C| + sum_children ((d1' - d1)^2 + (d2' - d2)^2)|child|.
struct RefineAudit {
  int round = 0;
  double measure = 0;
  double identity_lhs = 0;
  double identity_rhs = 0;
  double increment = 0;  // energy gain of this cell
  double required = 0;   // eta^4/128 |C|
  bool defective = false;
  std::array<std::vector<int>, 2> shift;       // selected grid shift per factor, cells
  std::array<double, 2> captured = {0, 0};     // captured fraction of child centres
  std::array<bool, 2> nonuniform = {false, false};
  double rect_mass = 0;
  double rect_bound = 0;  // 16 L_{j+1} / L_j |C|

  double identity_residual() const { return identity_lhs - identity_rhs; }
};

struct ScalePartition {
  int n = 0;
  int d1 = 0;
  int d2 = 0;
  double eta = 0;
  std::vector<double> scales;  // L_0 = 1 > L_1 > ...
  std::vector<int> scale_cells;
  std::vector<Cell> cells;
  double energy = 0;
  int rounds = 0;
  bool terminated = false;  // N-mass <= eta/2
  std::string status;       // "terminated", "scales-exhausted" or "round-limit"
  std::vector<double> energy_trace;
  std::vector<double> n_mass_trace;
  std::vector<RefineAudit> audits;
  double n_mass = 0;
  double r_mass = 0;
  double max_ratio = 0;  // max L_{j+1}/L_j over the scales used
};

// 1/2 sum_cells (delta1^2 + delta2^2)|C|, recomputed from B1, B2.
double energy(const GridFunction& B1, const GridFunction& B2, const ScalePartition& p);

struct RegularizeOptions {
  int max_rounds = 0;         // 0: ceil(256 eta^-5)
  bool strict_ratio = false;  // require L_{j+1} <= 2^{-(j+6)} eta L_j
};

// One-cell partition with the root classified at scales[1].
ScalePartition initial_partition(const GridFunction& B1, const GridFunction& B2,
                                 const std::vector<double>& scales, double eta,
                                 const RegularizeOptions& opt = {});

/**
 * Splits every non-uniform cell.  A non-uniform factor is cut along the grid
 * shift (stride one cell) whose child cubes capture the most centres with
 * |delta_child - delta| >= eta/2, ties broken by the larger variance and
 * then the smaller shift; a uniform factor is cut at its corner.  Partial
 * strips form rectangle cells.  New cubes are classified at the following
 * scale.  Throws Usage when there is no following scale.
 */
ScalePartition refine_nonuniform(const ScalePartition& p, const GridFunction& B1,
                                 const GridFunction& B2);

// Refines until the N-mass is <= eta/2, the scales run out, or the round limit.
ScalePartition regularize(const GridFunction& B1, const GridFunction& B2,
                          const std::vector<double>& scales, double eta,
                          const RegularizeOptions& opt = {});

// ------------------------------------------------------ increment search

struct IncrementWitness {
  std::vector<int> q1_lo, q2_lo;  // window corners, cells
  int side = 0;                   // window side, cells
  double L = 0;
  std::vector<unsigned char> b1_mask;  // within the q1 window, row-major
  std::vector<unsigned char> b2_mask;
  double b1_measure = 0;
  double b2_measure = 0;
  double alpha = 0;
  double density = 0;    // |A cap (B1' x B2')| / (|B1'| |B2'|)
  double increment = 0;  // density - alpha
  double score = 0;      // the normalized window integral that certified it
  double threshold = 0;  // c eta^8
  double eta = 0;
  bool from_scan = false;  // a whole window already exceeded the threshold
  std::array<double, 4> parts = {0, 0, 0, 0};  // I_11, I_12, I_21, I_22
  double window_mean = 0;
  double partition_residual = 0;  // sum(parts) - window_mean
  int pair = 0;                   // index into parts
};

struct InverseOptions {
  double c = 1.0 / 65536;
  int candidates = 8;  // windows examined by the level-set step
  int stride = 0;      // window lattice stride in cells; 0 picks max(1, m/4)
};

/**
 * Increment search for A subset B1 x B2 with F = (1_A - alpha 1_{B1xB2}) nu1 nu2.
 * Returns none when ||F||_box(L) < eta.  Windows are cubes of side L inside
 * the unit cube.  Throws Hypothesis when A is not inside B1 x B2.
 */
std::optional<IncrementWitness> inverse_search(const GridFunction& A, const GridFunction& B1,
                                               const GridFunction& B2, double L, double eta,
                                               const InverseOptions& opt = {});

// Relative density of A on B1' x B2' for a witness, by direct summation.
double witness_density(const GridFunction& A, const GridFunction& B1, const GridFunction& B2,
                       const IncrementWitness& w);

// ---------------------------------------------------------------- dichotomy

struct CountCertificate {
  double value = 0;  // T_box_c(1_A nu, ...)(lambda)
  double error = 0;
  double alpha = 0;
  double threshold = 0;  // alpha^4 / 2
  double box_norm = 0;
  double norm_threshold = 0;
  std::string basis;  // "norm" or "count"
  bool claim_holds = false;  // value + error >= threshold
};

struct DichotomyOptions {
  double norm_factor = 0.125;  // certificate when ||f_A nu||_box <= norm_factor alpha^4
  bool certify_by_count = true;
  bool strict_hypotheses = false;
  InverseOptions inverse;
  int budget = 0;  // sphere budget of the count; 0 = operator default
  std::uint64_t seed = 1;
};

enum class Branch { Certificate, Witness, Inconclusive };
std::string to_string(Branch b);

struct DichotomyOutcome {
  Branch branch = Branch::Inconclusive;
  std::optional<CountCertificate> certificate;
  std::optional<IncrementWitness> witness;
  double alpha = 0;
  double beta1 = 0;
  double beta2 = 0;
  double L = 0;  // norm scale actually used
  double box_norm = 0;
  double count = 0;
  double count_error = 0;
  double defect1 = 0;
  double defect2 = 0;
  bool hypotheses_met = true;
};

/**
 * Norm scale L = eps^4 lambda, clamped to [2h, 1/4].  B_i
 * defects are measured on the whole factor cube at L; with
 * strict_hypotheses a defect above eps throws Hypothesis.
 */
DichotomyOutcome dichotomy_step(const GridFunction& A, const GridFunction& B1,
                                const GridFunction& B2, double lambda, double eps, double c,
                                const DichotomyOptions& opt = {});

// ------------------------------------------------------------ the driver

struct Quadruple {
  std::vector<double> x, x2, y, y2;  // x2 = x - lambda a, y2 = y - c lambda b
  std::array<std::vector<int>, 4> cells;  // (x,y), (x2,y), (x,y2), (x2,y2)
  long draws = 0;
};

/**
 * Rejection sampling of x, y uniform and unit directions a, b; accepts when
 * all four points (x|x2) x (y|y2) lie in cells with A >= 1 - 1e-12.
 */
std::optional<Quadruple> extract_witness(const GridFunction& A, double lambda, double c, long budget,
                                         std::uint64_t seed, long* draws_used = nullptr);

struct PipelineConfig {
  double c = 1.0;
  std::vector<double> lambdas;  // empty: 2^-j / 4, j = 1..8
  double eps = 0.25;
  double tau_fraction = 0.25;  // tau = tau_fraction * alpha
  double eta_regularity = 0.25;
  std::vector<double> reg_scales;  // empty: 1, 1/4, 1/16, 1/64 (clipped to the grid)
  double increment_constant = 1.0 / 1099511627776.0;  // c' = 2^-40
  int max_iterations = 0;  // 0: lambdas.size()
  int min_cells = 8;
  bool extract = true;
  long witness_budget = 100000;
  DichotomyOptions dichotomy;
  std::uint64_t seed = 1;
};

struct PipelineStep {
  int iteration = 0;
  double lambda = 0;        // physical scale
  double lambda_local = 0;  // in the rescaled unit cube
  int n = 0;                // grid side of the working cube
  std::string branch;
  double alpha = 0;
  double alpha_after = 0;
  double energy = 0;
  double cell_density = 0;
  double box_norm = 0;
  double count = 0;
  double count_error = 0;
  std::string note;
};

struct PipelineReport {
  std::vector<PipelineStep> log;
  std::optional<CountCertificate> certificate;
  std::optional<Quadruple> quadruple;
  std::string outcome;  // "certificate", "scales-exhausted", "resolution-floor", "inconclusive"
  double alpha0 = 0;
  double j_ceiling = 0;  // 1 + ceil((1 - alpha) / (c' alpha^32)), may be huge
  double increment_step = 0;  // c' alpha^32
  long witness_draws = 0;
};

PipelineReport run_pipeline(const GridFunction& A, const PipelineConfig& cfg);

} // namespace gd

#endif
