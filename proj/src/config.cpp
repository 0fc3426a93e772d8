/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include "geodensity/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "geodensity/error.hpp"

namespace gd {

namespace {

KeyDef key(std::string name, KeyType t, Json fallback, std::string units, std::string doc,
           std::vector<std::string> choices = {}) {
  return KeyDef{std::move(name), t, std::move(fallback), std::move(units), std::move(doc), std::move(choices)};
}

const Json kRequired = nullptr;

std::vector<KeyDef> common_keys() {
  return {
      key("command", KeyType::String, kRequired, "", "operation to run", commands()),
      key("seed", KeyType::Seed, kRequired, "", "base seed; every random choice derives from it"),
      key("n", KeyType::Int, 64, "cells per axis", "grid resolution of every (factor) grid"),
      key("out_dir", KeyType::String, "out", "path", "directory for events.ndjson, summary.csv, manifest.json"),
      key("threads", KeyType::Int, 1, "", "recorded only; the library runs single-threaded"),
      key("oracle", KeyType::Bool, false, "", "run brute-force cross-checks where the grid allows"),
  };
}

std::vector<KeyDef> command_keys(const std::string& cmd) {
  if (cmd == "count")
    return {
        key("operator", KeyType::String, "distance", "", "configuration to count",
            {"distance", "simplex", "rectangle"}),
        key("sets", KeyType::SpecList, kRequired, "",
            "slot sets: distance 1 or 2, simplex 1 or k+1, rectangle 1 or 4; one set fills every slot"),
        key("d", KeyType::Int, 2, "", "dimension (distance, simplex)"),
        key("d1", KeyType::Int, 2, "", "first factor dimension (rectangle)"),
        key("d2", KeyType::Int, 2, "", "second factor dimension (rectangle)"),
        key("lambda", KeyType::Double, kRequired, "unit-cube lengths", "scale"),
        key("c", KeyType::Double, 1.0, "", "second-factor scale ratio (rectangle)"),
        key("method", KeyType::String, "fft", "", "count method",
            {"fft", "quadrature", "brute", "rotation", "iterated", "montecarlo"}),
        key("budget", KeyType::Int, 0, "nodes", "sphere or chain budget; 0 picks the operator default"),
        key("k", KeyType::Int, 2, "", "simplex: number of nonzero vertices of the equilateral simplex"),
        key("side", KeyType::Double, 1.0, "", "simplex: side length before scaling by lambda"),
    };
  if (cmd == "norms")
    return {
        key("set", KeyType::Spec, kRequired, "", "the set A; norms act on its balanced part"),
        key("d", KeyType::Int, 2, "", "dimension"),
        key("split", KeyType::Int, 0, "", "box norm: first factor dimension; 0 means d/2"),
        key("scales", KeyType::DoubleList, kRequired, "unit-cube lengths", "window scales L"),
        key("kinds", KeyType::StringList, Json::array({"u1", "uniformity"}), "", "norms to compute",
            {"u1", "uniformity", "box"}),
    };
  if (cmd == "gvn-check")
    return {
        key("lemma", KeyType::String, "distance", "", "inequality to check",
            {"distance", "simplex", "squared", "rectangle", "relative"}),
        key("trials", KeyType::Int, 5, "", "random inputs, trial t uses seed + t"),
        key("d", KeyType::Int, 2, "", "dimension (distance, simplex, squared, relative)"),
        key("d1", KeyType::Int, 2, "", "first factor dimension (rectangle)"),
        key("d2", KeyType::Int, 2, "", "second factor dimension (rectangle)"),
        key("p", KeyType::Double, 0.5, "", "density of the random slot sets"),
        key("p_b", KeyType::Double, 0.7, "", "density of the random ambient sets B (rectangle, relative)"),
        key("cellsize", KeyType::Double, 0.0625, "unit-cube lengths", "side of the random lattice cells"),
        key("lambda", KeyType::Double, 0.25, "unit-cube lengths", "scale"),
        key("eps", KeyType::Double, 0.5, "", "eps; the norm scale is eps^4 lambda"),
        key("c", KeyType::Double, 1.0, "", "scale ratio"),
        key("k", KeyType::Int, 2, "", "simplex size (simplex, squared, relative)"),
        key("side", KeyType::Double, 1.0, "", "simplex side length before scaling by lambda"),
        key("K", KeyType::Double, 0.0, "", "envelope constant; 0 picks the default"),
        key("budget", KeyType::Int, 0, "nodes", "sphere or chain budget; 0 picks the default"),
        key("fourier", KeyType::Bool, true, "", "include the Plancherel steps"),
    };
  if (cmd == "regularize")
    return {
        key("B1", KeyType::Spec, kRequired, "", "first factor set"),
        key("B2", KeyType::Spec, kRequired, "", "second factor set"),
        key("d1", KeyType::Int, 2, "", "first factor dimension"),
        key("d2", KeyType::Int, 2, "", "second factor dimension"),
        key("scales", KeyType::DoubleList, kRequired, "unit-cube lengths",
            "1 = L_0 > L_1 > ..., lacunary, whole cells"),
        key("eta", KeyType::Double, 0.25, "", "regularity parameter in (0,1]"),
        key("max_rounds", KeyType::Int, 0, "", "0 means ceil(256 eta^-5)"),
        key("strict_ratio", KeyType::Bool, false, "", "enforce L_{j+1} <= 2^{-(j+6)} eta L_j"),
    };
  if (cmd == "pipeline")
    return {
        key("A", KeyType::Spec, kRequired, "", "the set A on the (d1 + d2)-dimensional product cube"),
        key("d1", KeyType::Int, 2, "", "first factor dimension"),
        key("d2", KeyType::Int, 2, "", "second factor dimension"),
        key("c", KeyType::Double, 1.0, "", "second-factor scale ratio"),
        key("lambdas", KeyType::DoubleList, Json::array(), "unit-cube lengths",
            "decreasing scales; empty means 2^-j / 4 for j = 1..8"),
        key("eps", KeyType::Double, 0.25, "", "dichotomy eps; the norm scale is eps^4 lambda"),
        key("tau_fraction", KeyType::Double, 0.25, "", "tau = tau_fraction * alpha for the sparse-cell cut"),
        key("eta_regularity", KeyType::Double, 0.25, "", "eta of the regularity partition"),
        key("reg_scales", KeyType::DoubleList, Json::array(), "unit-cube lengths",
            "regularity scales; empty means quarter steps down to one cell"),
        key("increment_constant", KeyType::Double, std::ldexp(1.0, -40), "",
            "c' in the increment step c' alpha^32"),
        key("max_iterations", KeyType::Int, 0, "", "0 means the number of scales"),
        key("min_cells", KeyType::Int, 8, "cells per axis", "resolution floor of the working cube"),
        key("extract", KeyType::Bool, true, "", "sample an explicit point quadruple on certification"),
        key("witness_budget", KeyType::Int, 100000, "draws", "sampling budget of the quadruple search"),
        key("norm_factor", KeyType::Double, 0.125, "", "certify when the box norm is <= norm_factor alpha^4"),
        key("certify_by_count", KeyType::Bool, true, "", "also certify on the measured count"),
        key("strict_hypotheses", KeyType::Bool, false, "", "raise when B1 or B2 is not eps-uniform"),
        key("inverse_c", KeyType::Double, std::ldexp(1.0, -16), "", "increment threshold c eta^8"),
        key("candidates", KeyType::Int, 8, "", "windows examined by the level-set step"),
        key("budget", KeyType::Int, 0, "nodes", "sphere budget of the count; 0 picks the default"),
    };
  if (cmd == "witness")
    return {
        key("A", KeyType::Spec, kRequired, "", "the set A on the (d1 + d2)-dimensional product cube"),
        key("d1", KeyType::Int, 2, "", "first factor dimension"),
        key("d2", KeyType::Int, 2, "", "second factor dimension"),
        key("lambda", KeyType::Double, kRequired, "unit-cube lengths", "first-factor distance"),
        key("c", KeyType::Double, 1.0, "", "second-factor distance is c lambda"),
        key("budget", KeyType::Int, 100000, "draws", "sampling budget"),
        key("measure_count", KeyType::Bool, true, "", "also measure the rectangle count of A"),
    };
  return {};
}

bool type_ok(const Json& v, KeyType t) {
  switch (t) {
    case KeyType::Int: return v.is_number_integer();
    case KeyType::Seed: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case KeyType::Double: return v.is_number();
    case KeyType::Bool: return v.is_boolean();
    case KeyType::String: return v.is_string();
    case KeyType::DoubleList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number(); });
    case KeyType::StringList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_string(); });
    case KeyType::Spec: return v.is_object();
    case KeyType::SpecList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_object(); });
  }
  return false;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Doubles are stored as doubles even when written as integers, so that the
// canonical dump does not depend on how a number was typed.
Json normalize(const Json& v, KeyType t) {
  if (t == KeyType::Double) return v.get<double>();
  if (t == KeyType::DoubleList) {
    Json out = Json::array();
    for (const auto& x : v) out.push_back(x.get<double>());
    return out;
  }
  if (t == KeyType::Seed) return v.get<std::uint64_t>();
  return v;
}

std::vector<double> doubles(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(x.get<double>());
  return out;
}

// Fetches a required member of a spec object, with the expected JSON shape.
const Json* member(const Json& j, const std::string& name, const std::string& path, bool number,
                   std::vector<std::string>& errors) {
  if (!j.contains(name)) {
    errors.push_back(path + ": missing '" + name + "'");
    return nullptr;
  }
  const Json& m = j.at(name);
  if (number && !m.is_number()) {
    errors.push_back(path + "." + name + ": expected a number");
    return nullptr;
  }
  return &m;
}

std::vector<double> vec_member(const Json& j, const std::string& name, const std::string& path,
                               std::vector<std::string>& errors) {
  if (!j.contains(name)) {
    errors.push_back(path + ": missing '" + name + "'");
    return {};
  }
  const Json& m = j.at(name);
  if (!type_ok(m, KeyType::DoubleList) || m.empty()) {
    errors.push_back(path + "." + name + ": expected a nonempty list of numbers");
    return {};
  }
  return doubles(m);
}

void check_spec_dim(const SetSpec& s, int d, const std::string& path, std::vector<std::string>& errors) {
  const int sd = s.dim();
  if (sd != 0 && sd != d)
    errors.push_back(path + ": set has dimension " + std::to_string(sd) + " but the grid has " + std::to_string(d));
}

// The resolvability rule of every counting operator: a scale needs at least
// two grid cells.
void check_resolvable(double len, int n, const std::string& what, std::vector<std::string>& errors) {
  if (n > 0 && len < 2.0 / n * (1 - 1e-12))
    errors.push_back(what + " = " + fmt(len) + " is below 2/n = " + fmt(2.0 / n) +
                     ": scales must span at least two grid cells (resolvability rule " + what + " >= 2/n)");
}

void semantic_checks(const ExperimentConfig& cfg, std::vector<std::string>& errors) {
  const std::string& cmd = cfg.command();
  const int n = cfg.n();
  if (n < 2) errors.push_back("n: must be at least 2");
  if (cfg.get_int("threads") < 1) errors.push_back("threads: must be at least 1");
  auto dims_ok = [&](int d, const std::string& what) {
    if (d < 1 || d > kMaxDim) {
      errors.push_back(what + ": must lie in [1, " + std::to_string(kMaxDim) + "]");
      return false;
    }
    return true;
  };
  auto in_unit = [&](const std::string& k, bool closed_low = false) {
    const double x = cfg.get_double(k);
    if (!(closed_low ? x >= 0 : x > 0) || x > 1) errors.push_back(k + ": must lie in (0,1]");
  };
  auto specs_dim = [&](const std::string& k, int d) {
    std::vector<std::string> ignore;
    const Json& v = cfg.values.at(k);
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i)
        check_spec_dim(spec_from_json(v[i], k + "[" + std::to_string(i) + "]", ignore), d,
                       k + "[" + std::to_string(i) + "]", errors);
    } else {
      check_spec_dim(spec_from_json(v, k, ignore), d, k, errors);
    }
  };
  auto product_dims = [&]() {
    const int d1 = cfg.get_int("d1"), d2 = cfg.get_int("d2");
    const bool ok = dims_ok(d1, "d1") && dims_ok(d2, "d2");
    if (ok && d1 + d2 > kMaxDim) errors.push_back("d1 + d2: must be at most " + std::to_string(kMaxDim));
    return ok && d1 + d2 <= kMaxDim;
  };

  if (cmd == "count") {
    const std::string op = cfg.get_string("operator");
    const double lambda = cfg.get_double("lambda");
    in_unit("lambda");
    const std::size_t m = cfg.values.at("sets").size();
    if (op == "rectangle") {
      in_unit("c");
      if (product_dims()) specs_dim("sets", cfg.get_int("d1") + cfg.get_int("d2"));
      if (m != 1 && m != 4) errors.push_back("sets: rectangle counts take 1 or 4 sets");
      check_resolvable(lambda, n, "lambda", errors);
      check_resolvable(cfg.get_double("c") * lambda, n, "c lambda", errors);
    } else {
      if (dims_ok(cfg.get_int("d"), "d")) specs_dim("sets", cfg.get_int("d"));
      if (op == "distance") {
        if (m != 1 && m != 2) errors.push_back("sets: distance counts take 1 or 2 sets");
        check_resolvable(lambda, n, "lambda", errors);
      } else {
        const int k = cfg.get_int("k");
        if (k < 1 || k >= cfg.get_int("d") + 1) errors.push_back("k: must lie in [1, d]");
        if (m != 1 && m != static_cast<std::size_t>(k) + 1) errors.push_back("sets: simplex counts take 1 or k+1 sets");
        check_resolvable(lambda * cfg.get_double("side"), n, "lambda side", errors);
      }
    }
    if (cfg.get_int("budget") < 0) errors.push_back("budget: must be >= 0");
  } else if (cmd == "norms") {
    const int d = cfg.get_int("d");
    if (dims_ok(d, "d")) specs_dim("set", d);
    const int split = cfg.get_int("split");
    if (split < 0 || split >= d) errors.push_back("split: must lie in [0, d)");
    const auto kinds = cfg.get_strings("kinds");
    if (std::find(kinds.begin(), kinds.end(), "box") != kinds.end() && d < 2)
      errors.push_back("kinds: the box norm needs d >= 2");
    const auto scales = cfg.get_doubles("scales");
    if (scales.empty()) errors.push_back("scales: must not be empty");
    for (double L : scales)
      if (!(L > 0 && L <= 0.25)) errors.push_back("scales: " + fmt(L) + " must lie in (0, 1/4]");
      else if (L * n < 1 - 1e-9) errors.push_back("scales: " + fmt(L) + " is below one grid cell");
  } else if (cmd == "gvn-check") {
    const std::string lemma = cfg.get_string("lemma");
    if (cfg.get_int("trials") < 1) errors.push_back("trials: must be at least 1");
    in_unit("lambda");
    in_unit("eps");
    in_unit("c");
    in_unit("p");
    in_unit("p_b");
    in_unit("cellsize");
    const double lambda = cfg.get_double("lambda");
    if (lemma == "rectangle") {
      product_dims();
      check_resolvable(lambda, n, "lambda", errors);
      check_resolvable(cfg.get_double("c") * lambda, n, "c lambda", errors);
    } else if (dims_ok(cfg.get_int("d"), "d")) {
      if (lemma == "distance") {
        check_resolvable(cfg.get_double("c") * lambda, n, "c lambda", errors);
      } else {
        const int k = cfg.get_int("k");
        if (k < 1 || k >= cfg.get_int("d") + 1) errors.push_back("k: must lie in [1, d]");
        check_resolvable(lambda * cfg.get_double("side"), n, "lambda side", errors);
      }
    }
  } else if (cmd == "regularize") {
    if (dims_ok(cfg.get_int("d1"), "d1")) specs_dim("B1", cfg.get_int("d1"));
    if (dims_ok(cfg.get_int("d2"), "d2")) specs_dim("B2", cfg.get_int("d2"));
    in_unit("eta");
    // Lacunarity and lattice alignment are checked by the operation itself so
    // that the message reaches the event log.
  } else if (cmd == "pipeline") {
    if (product_dims()) specs_dim("A", cfg.get_int("d1") + cfg.get_int("d2"));
    in_unit("c");
    in_unit("eps");
    in_unit("eta_regularity");
    const auto lambdas = cfg.get_doubles("lambdas");
    for (std::size_t j = 1; j < lambdas.size(); ++j)
      if (!(lambdas[j] < lambdas[j - 1])) errors.push_back("lambdas: must decrease");
    // Only the first scale must be resolvable; later ones end the run at the
    // resolution floor.
    const double first = lambdas.empty() ? 0.125 : lambdas[0];
    check_resolvable(cfg.get_double("c") * first, n, "c lambda_1", errors);
    if (cfg.get_int("min_cells") < 2) errors.push_back("min_cells: must be at least 2");
    if (cfg.get_int("witness_budget") < 1) errors.push_back("witness_budget: must be positive");
  } else if (cmd == "witness") {
    if (product_dims()) specs_dim("A", cfg.get_int("d1") + cfg.get_int("d2"));
    in_unit("lambda");
    in_unit("c");
    check_resolvable(cfg.get_double("c") * cfg.get_double("lambda"), n, "c lambda", errors);
    if (cfg.get_int("budget") < 1) errors.push_back("budget: must be positive");
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace

std::string to_string(KeyType t) {
  switch (t) {
    case KeyType::Int: return "integer";
    case KeyType::Seed: return "unsigned integer";
    case KeyType::Double: return "number";
    case KeyType::Bool: return "boolean";
    case KeyType::String: return "string";
    case KeyType::DoubleList: return "list of numbers";
    case KeyType::StringList: return "list of strings";
    case KeyType::Spec: return "set spec";
    case KeyType::SpecList: return "list of set specs";
  }
  return "?";
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"count", "norms", "gvn-check", "regularize", "pipeline", "witness"};
  return c;
}

std::vector<KeyDef> schema(const std::string& command) {
  auto keys = common_keys();
  auto own = command_keys(command);
  keys.insert(keys.end(), own.begin(), own.end());
  return keys;
}

const std::string& ExperimentConfig::command() const { return values.at("command").get_ref<const std::string&>(); }
std::uint64_t ExperimentConfig::seed() const { return values.at("seed").get<std::uint64_t>(); }
int ExperimentConfig::n() const { return get_int("n"); }
int ExperimentConfig::get_int(const std::string& k) const { return values.at(k).get<int>(); }
double ExperimentConfig::get_double(const std::string& k) const { return values.at(k).get<double>(); }
bool ExperimentConfig::get_bool(const std::string& k) const { return values.at(k).get<bool>(); }
std::string ExperimentConfig::get_string(const std::string& k) const { return values.at(k).get<std::string>(); }
std::vector<double> ExperimentConfig::get_doubles(const std::string& k) const { return doubles(values.at(k)); }
std::vector<std::string> ExperimentConfig::get_strings(const std::string& k) const {
  return values.at(k).get<std::vector<std::string>>();
}

SetSpec ExperimentConfig::get_spec(const std::string& k) const {
  std::vector<std::string> errors;
  SetSpec s = spec_from_json(values.at(k), k, errors);
  require(errors.empty(), errors.empty() ? "" : errors.front());
  return s;
}

std::vector<SetSpec> ExperimentConfig::get_specs(const std::string& k) const {
  std::vector<SetSpec> out;
  std::vector<std::string> errors;
  for (const auto& j : values.at(k)) out.push_back(spec_from_json(j, k, errors));
  require(errors.empty(), errors.empty() ? "" : errors.front());
  return out;
}

SetSpec spec_from_json(const Json& j, const std::string& path, std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back(path + ": a set spec must be an object");
    return {};
  }
  if (!j.contains("type") || !j.at("type").is_string()) {
    errors.push_back(path + ": missing string 'type'");
    return {};
  }
  const std::string type = j.at("type").get<std::string>();
  const std::size_t before = errors.size();
  auto num = [&](const std::string& name) {
    const Json* m = member(j, name, path, true, errors);
    return m ? m->get<double>() : 0.0;
  };
  auto child = [&](const std::string& name) {
    const Json* m = member(j, name, path, false, errors);
    return m ? spec_from_json(*m, path + "." + name, errors) : SetSpec{};
  };
  auto children = [&]() {
    std::vector<SetSpec> parts;
    const Json* m = member(j, "parts", path, false, errors);
    if (m && (!m->is_array() || m->empty())) {
      errors.push_back(path + ".parts: expected a nonempty list of set specs");
      return parts;
    }
    if (m)
      for (std::size_t i = 0; i < m->size(); ++i)
        parts.push_back(spec_from_json((*m)[i], path + ".parts[" + std::to_string(i) + "]", errors));
    return parts;
  };

  SetSpec s;
  if (type == "cube") {
    const auto c = vec_member(j, "center", path, errors);
    const double hw = num("halfwidth");
    if (errors.size() == before) s = SetSpec::cube(c, hw);
  } else if (type == "box") {
    const auto c = vec_member(j, "center", path, errors);
    const auto hw = vec_member(j, "halfwidths", path, errors);
    if (errors.size() == before && c.size() != hw.size())
      errors.push_back(path + ": center and halfwidths differ in length");
    if (errors.size() == before) s = SetSpec::box(c, hw);
  } else if (type == "ball") {
    const auto c = vec_member(j, "center", path, errors);
    const double r = num("radius");
    if (errors.size() == before && !(r > 0)) errors.push_back(path + ".radius: must be positive");
    if (errors.size() == before) s = SetSpec::ball(c, r);
  } else if (type == "halfspace") {
    const auto nv = vec_member(j, "normal", path, errors);
    const double off = num("offset");
    if (errors.size() == before) s = SetSpec::halfspace(nv, off);
  } else if (type == "random") {
    const double p = num("p");
    const double cell = num("cellsize");
    std::uint64_t seed = 0;
    if (!j.contains("seed")) {
      errors.push_back(path + ": random sets need an explicit 'seed'");
    } else if (!type_ok(j.at("seed"), KeyType::Seed)) {
      errors.push_back(path + ".seed: expected an unsigned integer");
    } else {
      seed = j.at("seed").get<std::uint64_t>();
    }
    int dim = 0;
    if (j.contains("dim")) {
      if (!j.at("dim").is_number_integer()) errors.push_back(path + ".dim: expected an integer");
      else dim = j.at("dim").get<int>();
    }
    if (errors.size() == before && !(p >= 0 && p <= 1)) errors.push_back(path + ".p: must lie in [0,1]");
    if (errors.size() == before && !(cell > 0 && cell <= 1)) errors.push_back(path + ".cellsize: must lie in (0,1]");
    if (errors.size() == before) s = SetSpec::random(p, cell, seed, dim);
  } else if (type == "product") {
    SetSpec a = child("a");
    SetSpec b = child("b");
    if (errors.size() == before && (a.dim() == 0 || b.dim() == 0))
      errors.push_back(path + ": product factors need a fixed dimension (give random factors a 'dim')");
    if (errors.size() == before) s = SetSpec::product(a, b);
  } else if (type == "union" || type == "intersect") {
    auto parts = children();
    if (errors.size() == before) s = type == "union" ? SetSpec::union_of(parts) : SetSpec::intersect(parts);
  } else if (type == "complement") {
    SetSpec a = child("of");
    if (errors.size() == before) s = SetSpec::complement(a);
  } else {
    errors.push_back(path + ": unknown set type '" + type + "'");
  }
  return s;
}

Json spec_to_json(const SetSpec& s) {
  Json j;
  switch (s.kind) {
    case SetSpec::Kind::Cube:
      if (s.halfwidth.size() == 1) {
        j = {{"type", "cube"}, {"center", s.center}, {"halfwidth", s.halfwidth[0]}};
      } else {
        j = {{"type", "box"}, {"center", s.center}, {"halfwidths", s.halfwidth}};
      }
      break;
    case SetSpec::Kind::Ball: j = {{"type", "ball"}, {"center", s.center}, {"radius", s.radius}}; break;
    case SetSpec::Kind::Halfspace: j = {{"type", "halfspace"}, {"normal", s.normal}, {"offset", s.offset}}; break;
    case SetSpec::Kind::Random:
      j = {{"type", "random"}, {"p", s.p}, {"cellsize", s.cellsize}, {"seed", s.seed}};
      if (s.dim_hint != 0) j["dim"] = s.dim_hint;
      break;
    case SetSpec::Kind::Product:
      j = {{"type", "product"}, {"a", spec_to_json(s.children.at(0))}, {"b", spec_to_json(s.children.at(1))}};
      break;
    case SetSpec::Kind::Union:
    case SetSpec::Kind::Intersect: {
      Json parts = Json::array();
      for (const auto& c : s.children) parts.push_back(spec_to_json(c));
      j = {{"type", s.kind == SetSpec::Kind::Union ? "union" : "intersect"}, {"parts", parts}};
      break;
    }
    case SetSpec::Kind::Complement: j = {{"type", "complement"}, {"of", spec_to_json(s.children.at(0))}}; break;
  }
  return j;
}

ParseResult parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    ParseResult r;
    r.errors.push_back(std::string("config is not valid JSON: ") + e.what());
    return r;
  }
  return parse_config(j);
}

ParseResult parse_config(const Json& j) {
  ParseResult r;
  if (!j.is_object()) {
    r.errors.push_back("config must be a JSON object");
    return r;
  }
  std::string cmd;
  if (!j.contains("command") || !j.at("command").is_string()) {
    r.errors.push_back("command: required string, one of count, norms, gvn-check, regularize, pipeline, witness");
  } else {
    cmd = j.at("command").get<std::string>();
    const auto& cs = commands();
    if (std::find(cs.begin(), cs.end(), cmd) == cs.end()) {
      r.errors.push_back("command: unknown command '" + cmd + "'");
      cmd.clear();
    }
  }
  const auto keys = cmd.empty() ? common_keys() : schema(cmd);

  Json values = Json::object();
  for (const auto& k : keys) {
    if (!j.contains(k.name)) {
      if (k.fallback.is_null()) {
        if (k.name == "seed")
          r.errors.push_back("seed: required; every run must be reproducible from its config");
        else if (k.name != "command")
          r.errors.push_back(k.name + ": required " + to_string(k.type));
        continue;
      }
      values[k.name] = k.fallback;
      r.config.defaulted.push_back(k.name);
      continue;
    }
    const Json& v = j.at(k.name);
    if (!type_ok(v, k.type)) {
      r.errors.push_back(k.name + ": expected " + to_string(k.type) + ", got " + v.dump());
      continue;
    }
    if (!k.choices.empty()) {
      std::vector<std::string> given =
          k.type == KeyType::String ? std::vector<std::string>{v.get<std::string>()} : v.get<std::vector<std::string>>();
      bool ok = true;
      for (const auto& g : given)
        if (std::find(k.choices.begin(), k.choices.end(), g) == k.choices.end()) {
          std::string list;
          for (const auto& c : k.choices) list += (list.empty() ? "" : ", ") + c;
          r.errors.push_back(k.name + ": '" + g + "' is not one of " + list);
          ok = false;
        }
      if (!ok) continue;
    }
    if (k.type == KeyType::Spec) {
      std::vector<std::string> errs;
      values[k.name] = spec_to_json(spec_from_json(v, k.name, errs));
      r.errors.insert(r.errors.end(), errs.begin(), errs.end());
      continue;
    }
    if (k.type == KeyType::SpecList) {
      Json list = Json::array();
      std::vector<std::string> errs;
      for (std::size_t i = 0; i < v.size(); ++i)
        list.push_back(spec_to_json(spec_from_json(v[i], k.name + "[" + std::to_string(i) + "]", errs)));
      if (v.empty()) errs.push_back(k.name + ": must not be empty");
      r.errors.insert(r.errors.end(), errs.begin(), errs.end());
      values[k.name] = list;
      continue;
    }
    values[k.name] = normalize(v, k.type);
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const KeyDef& k) { return k.name == it.key(); }))
      r.warnings.push_back("unknown key '" + it.key() + "' ignored");

  if (!r.errors.empty()) return r;
  r.config.values = std::move(values);
  semantic_checks(r.config, r.errors);
  r.ok = r.errors.empty();
  return r;
}

std::string serialize(const ExperimentConfig& cfg) { return cfg.values.dump(2); }

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = cfg.values;
  j.erase("out_dir");
  j.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

} // namespace gd
