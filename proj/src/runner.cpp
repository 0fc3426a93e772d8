/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "geodensity/counting.hpp"
#include "geodensity/increment.hpp"
#include "geodensity/measures.hpp"
#include "geodensity/norms.hpp"
#include "geodensity/vonneumann.hpp"

namespace gd {

namespace {

using Clock = std::chrono::steady_clock;

// Independent child seeds for the sets of one trial.
std::uint64_t derive(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Recorder {
 public:
  explicit Recorder(const ExperimentConfig& cfg) : seed_(cfg.seed()), hash_(config_hash(cfg)) {}

  // Runs fn, which fills inputs/value/error/outputs, and stamps the record.
  void emit(const std::string& op, const std::function<void(Json&)>& fn) {
    const auto t0 = Clock::now();
    Json r = {{"op", op}, {"inputs", Json::object()}, {"value", nullptr}, {"error_estimate", nullptr},
              {"outputs", Json::object()}};
    fn(r);
    r["seed"] = seed_;
    r["config_hash"] = hash_;
    r["timing"] = {{"seconds", std::chrono::duration<double>(Clock::now() - t0).count()}};
    records.push_back(std::move(r));
  }

  std::vector<Json> records;

 private:
  std::uint64_t seed_;
  std::string hash_;
};

GridFunction product_grid(const SetSpec& s, int d1, int d2, int n) {
  GridFunction g = make_grid_function(s, d1 + d2, n);
  g.split = d1;
  return g;
}

Json step_json(const ExactStep& s) {
  return {{"name", s.name}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"identity", s.identity}, {"tol", s.tol}, {"ok", s.ok}};
}

void fill_report(Json& r, const InequalityReport& rep) {
  r["value"] = rep.lhs;
  r["error_estimate"] = rep.numeric_error;
  Json steps = Json::array();
  for (const auto& s : rep.exact_steps) steps.push_back(step_json(s));
  Json inputs = Json::object();
  for (const auto& [k, v] : rep.inputs) inputs[k] = v;
  r["inputs"] = inputs;
  r["outputs"] = {{"check", rep.check},
                  {"rhs_main", rep.rhs_main},
                  {"rhs_error", rep.rhs_error},
                  {"slack", rep.slack},
                  {"verdict", to_string(rep.verdict)},
                  {"exact_ok", rep.exact_ok()},
                  {"worst_exact_ratio", rep.worst_exact_ratio()},
                  {"hypotheses_met", rep.hypotheses_met},
                  {"argmin_slot", rep.argmin_slot},
                  {"note", rep.note},
                  {"exact_steps", steps}};
}

Json count_json(const CountResult& c) {
  return {{"method", to_string(c.method)}, {"nodes", c.nodes}, {"rotations", c.rotations}};
}

// ------------------------------------------------------------------ count

void run_count(const ExperimentConfig& cfg, Recorder& rec) {
  const std::string op = cfg.get_string("operator");
  const int n = cfg.n();
  const double lambda = cfg.get_double("lambda");
  const auto specs = cfg.get_specs("sets");
  CountOptions co;
  co.method = parse_count_method(cfg.get_string("method"));
  co.budget = cfg.get_int("budget");
  co.seed = cfg.seed();

  if (op == "rectangle") {
    const int d1 = cfg.get_int("d1"), d2 = cfg.get_int("d2");
    const double c = cfg.get_double("c");
    std::vector<GridFunction> f;
    for (const auto& s : specs) f.push_back(product_grid(s, d1, d2, n));
    while (f.size() < 4) f.push_back(f[0]);
    rec.emit("count.rectangle", [&](Json& r) {
      const auto res = count_rectangle(f[0], f[1], f[2], f[3], lambda, c, co);
      r["inputs"] = {{"lambda", lambda}, {"c", c}, {"n", n}, {"d1", d1}, {"d2", d2},
                     {"method", cfg.get_string("method")}, {"budget", co.budget}};
      r["value"] = res.value;
      r["error_estimate"] = res.error;
      r["outputs"] = count_json(res);
    });
    return;
  }

  const int d = cfg.get_int("d");
  std::vector<GridFunction> f;
  for (const auto& s : specs) f.push_back(make_grid_function(s, d, n));
  Json densities = Json::array();
  for (const auto& g : f) densities.push_back(density(g));

  if (op == "distance") {
    if (f.size() == 1) f.push_back(f[0]);
    CountResult res;
    rec.emit("count.distance", [&](Json& r) {
      res = count_distance(f[0], f[1], lambda, co);
      r["inputs"] = {{"lambda", lambda}, {"n", n}, {"d", d}, {"method", cfg.get_string("method")},
                     {"budget", co.budget}, {"densities", densities}};
      r["value"] = res.value;
      r["error_estimate"] = res.error;
      r["outputs"] = count_json(res);
    });
    if (cfg.get_bool("oracle")) {
      rec.emit("count.distance.oracle", [&](Json& r) {
        r["inputs"] = {{"lambda", lambda}, {"n", n}, {"d", d}, {"method", "brute"}};
        if (n > kBruteMaxN) {
          r["outputs"] = {{"skipped", "n exceeds the brute-force limit " + std::to_string(kBruteMaxN)}};
          return;
        }
        CountOptions bo = co;
        bo.method = CountMethod::Brute;
        const auto b = count_distance(f[0], f[1], lambda, bo);
        r["value"] = b.value;
        r["error_estimate"] = b.error;
        const double dev = std::abs(b.value - res.value) / std::max(std::abs(b.value), 1e-300);
        r["outputs"] = {{"relative_deviation", dev}, {"primary_value", res.value}};
      });
    }
    return;
  }

  const int k = cfg.get_int("k");
  const double side = cfg.get_double("side");
  while (static_cast<int>(f.size()) < k + 1) f.push_back(f[0]);
  rec.emit("count.simplex", [&](Json& r) {
    const auto res = count_simplex(f, SimplexSpec::equilateral(k, side), lambda, co);
    r["inputs"] = {{"lambda", lambda}, {"n", n}, {"d", d}, {"k", k}, {"side", side},
                   {"method", cfg.get_string("method")}, {"budget", co.budget}, {"densities", densities}};
    r["value"] = res.value;
    r["error_estimate"] = res.error;
    r["outputs"] = count_json(res);
  });
}

// ------------------------------------------------------------------ norms

void run_norms(const ExperimentConfig& cfg, Recorder& rec) {
  const int n = cfg.n(), d = cfg.get_int("d");
  const GridFunction A = make_grid_function(cfg.get_spec("set"), d, n);
  const GridFunction f = balanced_part(A);
  const auto kinds = cfg.get_strings("kinds");
  auto has = [&](const char* k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
  for (double L : cfg.get_doubles("scales")) {
    if (has("u1"))
      rec.emit("norms.u1", [&](Json& r) {
        r["inputs"] = {{"L", L}, {"n", n}, {"d", d}, {"density", density(A)}};
        r["value"] = u1_norm(f, L);
        r["error_estimate"] = 0.0;
        r["outputs"] = {{"L_used", static_cast<double>(window_cells(L, n)) / n}};
      });
    if (has("uniformity"))
      rec.emit("norms.uniformity", [&](Json& r) {
        const auto u = uniformity_defect(A, L);
        r["inputs"] = {{"L", L}, {"n", n}, {"d", d}};
        r["value"] = u.eps_min;
        r["error_estimate"] = 0.0;
        r["outputs"] = {{"L_used", u.L}, {"norm", u.norm}, {"bad_mass", u.bad_mass}, {"eps", u.eps},
                        {"density", u.density}};
      });
    if (has("box"))
      rec.emit("norms.box", [&](Json& r) {
        GridFunction g = f;
        g.split = cfg.get_int("split") > 0 ? cfg.get_int("split") : d / 2;
        const auto b = box_norm(g, L);
        r["inputs"] = {{"L", L}, {"n", n}, {"d1", g.split}, {"d2", d - g.split}};
        r["value"] = b.value;
        r["error_estimate"] = 0.0;
        r["outputs"] = {{"L_used", b.L}, {"fourth", b.fourth}, {"stride", b.stride}};
      });
  }
}

// -------------------------------------------------------------- gvn-check

GridFunction balanced_random(const ExperimentConfig& cfg, int d, std::uint64_t seed,
                             const GridFunction* mask = nullptr) {
  GridFunction a = make_grid_function(SetSpec::random(cfg.get_double("p"), cfg.get_double("cellsize"), seed), d, cfg.n());
  if (!mask) return balanced_part(a);
  a = pointwise(a, *mask);
  a.indicator = true;
  if (!(density(a) > 0)) return GridFunction::zeros(d, cfg.n(), mask->split);
  GridFunction b = balanced_part(a, *mask);
  b.split = mask->split;
  return b;
}

void run_gvn(const ExperimentConfig& cfg, Recorder& rec) {
  const std::string lemma = cfg.get_string("lemma");
  const int n = cfg.n();
  const double lambda = cfg.get_double("lambda"), eps = cfg.get_double("eps"), c = cfg.get_double("c");
  const int trials = cfg.get_int("trials");
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = cfg.seed() + static_cast<std::uint64_t>(t);
    GvnOptions opt;
    opt.K = cfg.get_double("K");
    opt.budget = cfg.get_int("budget");
    opt.seed = s;
    opt.fourier_steps = cfg.get_bool("fourier");
    rec.emit("gvn-check." + lemma, [&](Json& r) {
      InequalityReport rep;
      if (lemma == "distance") {
        const int d = cfg.get_int("d");
        rep = check_gvn_distance(balanced_random(cfg, d, derive(s, 0)), balanced_random(cfg, d, derive(s, 1)),
                                 lambda, eps, c, opt);
      } else if (lemma == "rectangle") {
        const int d1 = cfg.get_int("d1"), d2 = cfg.get_int("d2");
        const double pb = cfg.get_double("p_b"), cell = cfg.get_double("cellsize");
        const auto B1 = make_grid_function(SetSpec::random(pb, cell, derive(s, 10)), d1, n);
        const auto B2 = make_grid_function(SetSpec::random(pb, cell, derive(s, 11)), d2, n);
        require(density(B1) > 0 && density(B2) > 0, "a random factor set came out empty; raise p_b");
        const GridFunction mask = tensor(B1, B2);
        std::array<GridFunction, 4> f;
        for (int i = 0; i < 4; ++i) f[i] = balanced_random(cfg, d1 + d2, derive(s, i), &mask);
        rep = check_gvn_rectangle(f, B1, B2, lambda, eps, c, opt);
      } else {
        const int d = cfg.get_int("d"), k = cfg.get_int("k");
        const auto simplex = SimplexSpec::equilateral(k, cfg.get_double("side"));
        if (lemma == "relative") {
          const auto B = make_grid_function(
              SetSpec::random(cfg.get_double("p_b"), cfg.get_double("cellsize"), derive(s, 10)), d, n);
          require(density(B) > 0, "the random ambient set came out empty; raise p_b");
          std::vector<GridFunction> fs;
          for (int i = 0; i <= k; ++i) fs.push_back(balanced_random(cfg, d, derive(s, i), &B));
          rep = check_gvn_relative_simplex(fs, simplex, B, lambda, eps, opt);
        } else {
          std::vector<GridFunction> fs;
          for (int i = 0; i <= k; ++i) fs.push_back(balanced_random(cfg, d, derive(s, i)));
          rep = check_gvn_simplex(fs, simplex, lambda, eps,
                                  lemma == "squared" ? SimplexVariant::Squared : SimplexVariant::Direct, opt);
        }
      }
      fill_report(r, rep);
      r["inputs"]["trial"] = t;
      r["inputs"]["trial_seed"] = s;
    });
  }
}

// ------------------------------------------------------------- regularize

int run_regularize(const ExperimentConfig& cfg, Recorder& rec) {
  const int n = cfg.n(), d1 = cfg.get_int("d1"), d2 = cfg.get_int("d2");
  const auto B1 = make_grid_function(cfg.get_spec("B1"), d1, n);
  const auto B2 = make_grid_function(cfg.get_spec("B2"), d2, n);
  const auto scales = cfg.get_doubles("scales");
  const double eta = cfg.get_double("eta");
  RegularizeOptions ro;
  ro.max_rounds = cfg.get_int("max_rounds");
  ro.strict_ratio = cfg.get_bool("strict_ratio");
  ScalePartition P;
  rec.emit("regularize", [&](Json& r) {
    P = regularize(B1, B2, scales, eta, ro);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& c : P.cells) ++counts[static_cast<int>(c.kind)];
    r["inputs"] = {{"n", n}, {"d1", d1}, {"d2", d2}, {"scales", scales}, {"eta", eta},
                   {"beta1", density(B1)}, {"beta2", density(B2)}};
    r["value"] = P.energy;
    r["error_estimate"] = std::abs(energy(B1, B2, P) - P.energy);
    r["outputs"] = {{"status", P.status},
                    {"rounds", P.rounds},
                    {"round_bound", std::ceil(256 * std::pow(eta, -5))},
                    {"n_mass", P.n_mass},
                    {"r_mass", P.r_mass},
                    {"max_ratio", P.max_ratio},
                    {"energy_trace", P.energy_trace},
                    {"n_mass_trace", P.n_mass_trace},
                    {"uniform_cells", counts[0]},
                    {"nonuniform_cells", counts[1]},
                    {"rectangle_cells", counts[2]}};
  });
  // One summary per refinement round.
  for (int round = 1; round <= P.rounds; ++round) {
    rec.emit("regularize.round", [&](Json& r) {
      double worst_identity = 0, min_ratio = INFINITY, worst_rect = 0, gain = 0, measure = 0;
      int refined = 0, defective = 0, shortfalls = 0;
      for (const auto& a : P.audits) {
        if (a.round != round) continue;
        ++refined;
        measure += a.measure;
        gain += a.increment;
        worst_identity = std::max(worst_identity, std::abs(a.identity_residual()));
        if (a.rect_bound > 0) worst_rect = std::max(worst_rect, a.rect_mass / a.rect_bound);
        if (a.defective) {
          ++defective;
          min_ratio = std::min(min_ratio, a.increment / a.required);
          if (a.increment < a.required) ++shortfalls;
        }
      }
      r["inputs"] = {{"round", round}, {"eta", eta}};
      r["value"] = gain;
      r["error_estimate"] = worst_identity;
      r["outputs"] = {{"refined_cells", refined},
                      {"refined_measure", measure},
                      {"defective_cells", defective},
                      {"min_increment_ratio", std::isfinite(min_ratio) ? Json(min_ratio) : Json(nullptr)},
                      {"increment_shortfalls", shortfalls},
                      {"worst_identity_residual", worst_identity},
                      {"worst_rectangle_ratio", worst_rect}};
    });
  }
  return P.terminated ? 0 : 3;
}

// --------------------------------------------------------------- pipeline

Json quadruple_json(const Quadruple& q) {
  Json cells = Json::array();
  for (const auto& c : q.cells) cells.push_back(c);
  return {{"x", q.x}, {"x2", q.x2}, {"y", q.y}, {"y2", q.y2}, {"cells", cells}, {"draws", q.draws}};
}

Json certificate_json(const CountCertificate& c) {
  return {{"value", c.value}, {"error", c.error}, {"alpha", c.alpha}, {"threshold", c.threshold},
          {"box_norm", c.box_norm}, {"norm_threshold", c.norm_threshold}, {"basis", c.basis},
          {"claim_holds", c.claim_holds}};
}

int run_pipeline_cmd(const ExperimentConfig& cfg, Recorder& rec) {
  const int n = cfg.n(), d1 = cfg.get_int("d1"), d2 = cfg.get_int("d2");
  const GridFunction A = product_grid(cfg.get_spec("A"), d1, d2, n);
  PipelineConfig pc;
  pc.c = cfg.get_double("c");
  pc.lambdas = cfg.get_doubles("lambdas");
  pc.eps = cfg.get_double("eps");
  pc.tau_fraction = cfg.get_double("tau_fraction");
  pc.eta_regularity = cfg.get_double("eta_regularity");
  pc.reg_scales = cfg.get_doubles("reg_scales");
  pc.increment_constant = cfg.get_double("increment_constant");
  pc.max_iterations = cfg.get_int("max_iterations");
  pc.min_cells = cfg.get_int("min_cells");
  pc.extract = cfg.get_bool("extract");
  pc.witness_budget = cfg.get_int("witness_budget");
  pc.dichotomy.norm_factor = cfg.get_double("norm_factor");
  pc.dichotomy.certify_by_count = cfg.get_bool("certify_by_count");
  pc.dichotomy.strict_hypotheses = cfg.get_bool("strict_hypotheses");
  pc.dichotomy.inverse.c = cfg.get_double("inverse_c");
  pc.dichotomy.inverse.candidates = cfg.get_int("candidates");
  pc.dichotomy.budget = cfg.get_int("budget");
  pc.seed = cfg.seed();

  PipelineReport rep;
  const auto t0 = Clock::now();
  rep = run_pipeline(A, pc);
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  for (const auto& s : rep.log)
    rec.emit("pipeline.step", [&](Json& r) {
      r["inputs"] = {{"iteration", s.iteration}, {"lambda", s.lambda}, {"lambda_local", s.lambda_local}, {"n", s.n}};
      r["value"] = s.alpha_after;
      r["error_estimate"] = s.count_error;
      r["outputs"] = {{"branch", s.branch}, {"alpha", s.alpha}, {"alpha_after", s.alpha_after},
                      {"energy", s.energy}, {"cell_density", s.cell_density}, {"box_norm", s.box_norm},
                      {"count", s.count}, {"note", s.note}};
    });
  rec.emit("pipeline", [&](Json& r) {
    r["inputs"] = {{"n", n}, {"d1", d1}, {"d2", d2}, {"c", pc.c}, {"eps", pc.eps},
                   {"increment_constant", pc.increment_constant}, {"norm_factor", pc.dichotomy.norm_factor}};
    r["value"] = rep.certificate ? Json(rep.certificate->value) : Json(nullptr);
    r["error_estimate"] = rep.certificate ? Json(rep.certificate->error) : Json(nullptr);
    r["outputs"] = {{"outcome", rep.outcome},
                    {"alpha0", rep.alpha0},
                    {"iterations", rep.log.size()},
                    {"j_ceiling", rep.j_ceiling},
                    {"increment_step", rep.increment_step},
                    {"witness_draws", rep.witness_draws},
                    {"certificate", rep.certificate ? certificate_json(*rep.certificate) : Json(nullptr)},
                    {"quadruple", rep.quadruple ? quadruple_json(*rep.quadruple) : Json(nullptr)}};
    r["timing"] = {{"pipeline_seconds", seconds}};
  });
  if (rep.outcome == "certificate") return 0;
  if (rep.outcome == "inconclusive") return 2;
  return 3;
}

// ---------------------------------------------------------------- witness

int run_witness(const ExperimentConfig& cfg, Recorder& rec) {
  const int n = cfg.n(), d1 = cfg.get_int("d1"), d2 = cfg.get_int("d2");
  const GridFunction A = product_grid(cfg.get_spec("A"), d1, d2, n);
  const double lambda = cfg.get_double("lambda"), c = cfg.get_double("c");
  const long budget = cfg.get_int("budget");
  bool found = false;
  rec.emit("witness", [&](Json& r) {
    r["inputs"] = {{"n", n}, {"d1", d1}, {"d2", d2}, {"lambda", lambda}, {"c", c}, {"budget", budget}};
    Json out = Json::object();
    if (cfg.get_bool("measure_count")) {
      CountOptions co;
      co.seed = cfg.seed();
      const auto cr = count_rectangle(A, A, A, A, lambda, c, co);
      out["count"] = cr.value;
      out["count_error"] = cr.error;
      out["expected_draws"] = cr.value > 0 ? Json(1 / cr.value) : Json(nullptr);
    }
    long draws = 0;
    const auto q = extract_witness(A, lambda, c, budget, cfg.seed(), &draws);
    found = q.has_value();
    out["found"] = found;
    out["draws"] = draws;
    out["quadruple"] = q ? quadruple_json(*q) : Json(nullptr);
    r["value"] = draws;
    r["outputs"] = out;
  });
  return found ? 0 : 2;
}

void write_outputs(const ExperimentConfig& cfg, const RunResult& res, double seconds) {
  namespace fs = std::filesystem;
  const fs::path dir = cfg.get_string("out_dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("events.ndjson");
    for (const auto& r : res.records) f << r.dump() << '\n';
  }
  {
    auto f = open("summary.csv");
    f << "index,op,value,error_estimate,status\n";
    for (std::size_t i = 0; i < res.records.size(); ++i) {
      const auto& r = res.records[i];
      const auto& o = r.at("outputs");
      std::string status;
      for (const char* k : {"verdict", "status", "outcome", "branch", "found"})
        if (o.contains(k)) {
          status = o.at(k).is_string() ? o.at(k).get<std::string>() : o.at(k).dump();
          break;
        }
      if (r.at("op") == "error") status = o.value("kind", "");
      f << i << ',' << r.at("op").get<std::string>() << ',' << (r.at("value").is_null() ? "" : r.at("value").dump())
        << ',' << (r.at("error_estimate").is_null() ? "" : r.at("error_estimate").dump()) << ',' << status << '\n';
    }
  }
  {
    auto f = open("manifest.json");
    Json m = {{"config", cfg.values},
              {"defaults_applied", cfg.defaulted},
              {"config_hash", res.config_hash},
              {"seed", cfg.seed()},
              {"exit_code", res.exit_code},
              {"message", res.message},
              {"records", res.records.size()},
              {"wall_seconds", seconds},
              {"files", {"events.ndjson", "summary.csv", "manifest.json"}}};
    f << m.dump(2) << '\n';
  }
}

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Hypothesis: return "hypothesis";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Io: return "io";
  }
  return "?";
}

} // namespace

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Hypothesis: return 2;
    case ErrorKind::Resolution: return 3;
    case ErrorKind::Io: return 1;
  }
  return 1;
}

RunResult run(const ExperimentConfig& cfg, const RunOptions& opt) {
  RunResult res;
  res.config_hash = config_hash(cfg);
  Recorder rec(cfg);
  const auto t0 = Clock::now();
  const std::string& cmd = cfg.command();
  try {
    if (cmd == "count") run_count(cfg, rec);
    else if (cmd == "norms") run_norms(cfg, rec);
    else if (cmd == "gvn-check") run_gvn(cfg, rec);
    else if (cmd == "regularize") res.exit_code = run_regularize(cfg, rec);
    else if (cmd == "pipeline") res.exit_code = run_pipeline_cmd(cfg, rec);
    else if (cmd == "witness") res.exit_code = run_witness(cfg, rec);
    else throw Error(ErrorKind::Usage, "unknown command '" + cmd + "'");
    res.message = res.exit_code == 0 ? "completed" : "completed without the requested outcome";
    if (cmd == "regularize" && res.exit_code == 3)
      res.message = "regularization did not terminate before the scale list or round limit ran out";
    if (cmd == "pipeline" && res.exit_code == 3) res.message = "pipeline stopped at the resolution floor or ran out of scales";
    if (cmd == "pipeline" && res.exit_code == 2) res.message = "dichotomy found neither a certificate nor an increment";
    if (cmd == "witness" && res.exit_code == 2) res.message = "sampling budget exhausted; the measured count is in the record";
  } catch (const Error& e) {
    res.exit_code = exit_code(e.kind());
    res.message = e.what();
    rec.emit("error", [&](Json& r) {
      r["inputs"] = {{"command", cmd}};
      r["outputs"] = {{"kind", kind_name(e.kind())}, {"message", e.what()}};
    });
  }
  res.records = std::move(rec.records);
  if (opt.write_files) write_outputs(cfg, res, std::chrono::duration<double>(Clock::now() - t0).count());
  return res;
}

std::string deterministic_line(const Json& record) {
  Json r = record;
  r.erase("timing");
  return r.dump();
}

} // namespace gd
