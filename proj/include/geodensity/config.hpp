/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_CONFIG_HPP
#define GEODENSITY_CONFIG_HPP

// Experiment configuration: a JSON object validated against a per-command
// key table.  Every key of the table is present after parsing (defaults are
// filled in), so the canonical dump doubles as the run manifest.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "geodensity/grid.hpp"

namespace gd {

using Json = nlohmann::json;

enum class KeyType { Int, Seed, Double, Bool, String, DoubleList, StringList, Spec, SpecList };
std::string to_string(KeyType t);

struct KeyDef {
  std::string name;
  KeyType type;
  Json fallback;      // null: required
  std::string units;  // for the schema dump
  std::string doc;
  std::vector<std::string> choices;  // String / StringList only
};

// Keys shared by every command, then the command's own keys.
const std::vector<std::string>& commands();
std::vector<KeyDef> schema(const std::string& command);

struct ExperimentConfig {
  Json values;                        // every schema key, canonical order
  std::vector<std::string> defaulted;  // keys filled from the schema

  const std::string& command() const;
  std::uint64_t seed() const;
  int n() const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  SetSpec get_spec(const std::string& key) const;
  std::vector<SetSpec> get_specs(const std::string& key) const;
};

struct ParseResult {
  bool ok = false;
  ExperimentConfig config;
  std::vector<std::string> errors;  // all of them, not just the first
  std::vector<std::string> warnings;
};

ParseResult parse_config(const std::string& text);
ParseResult parse_config(const Json& j);

// Canonical JSON text (sorted keys, two-space indent); parse_config of it
// reproduces the same config.
std::string serialize(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical dump without `out_dir` and `threads`, which do
// not affect any output.  16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Set specs in JSON: {"type": "cube" | "box" | "ball" | "halfspace" |
// "random" | "product" | "union" | "intersect" | "complement", ...}.
// Errors are appended with `path` as prefix.
SetSpec spec_from_json(const Json& j, const std::string& path, std::vector<std::string>& errors);
Json spec_to_json(const SetSpec& s);

} // namespace gd

#endif
