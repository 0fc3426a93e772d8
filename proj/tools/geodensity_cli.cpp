/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "geodensity/config.hpp"
#include "geodensity/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"geodensity: counting, uniformity norms and density increments on gridded sets"};
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool oracle = false;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides out_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides seed)");
  auto* threads_opt = app.add_option("--threads", threads, "recorded in the manifest; runs are single-threaded")
                          ->check(CLI::PositiveNumber);
  app.add_flag("--oracle", oracle, "force brute-force cross-checks where the grid allows");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << '\n';
    return 1;
  }
  std::stringstream text;
  text << in.rdbuf();
  gd::Json j;
  try {
    j = gd::Json::parse(text.str());
  } catch (const gd::Json::parse_error& e) {
    std::cerr << "error: " << config_path << " is not valid JSON: " << e.what() << '\n';
    return 1;
  }
  if (j.is_object()) {
    if (*out_opt) j["out_dir"] = out_dir;
    if (*seed_opt) j["seed"] = seed;
    if (*threads_opt) j["threads"] = threads;
    if (oracle) j["oracle"] = true;
  }

  const gd::ParseResult parsed = gd::parse_config(j);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  if (!parsed.ok) {
    for (const auto& e : parsed.errors) std::cerr << "error: " << e << '\n';
    return 1;
  }

  try {
    const gd::RunResult res = gd::run(parsed.config);
    std::cout << parsed.config.command() << ": " << res.message << " (" << res.records.size()
              << " records, config " << res.config_hash << ", output in "
              << parsed.config.get_string("out_dir") << ")\n";
    if (res.exit_code != 0) std::cerr << "exit " << res.exit_code << ": " << res.message << '\n';
    return res.exit_code;
  } catch (const gd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gd::exit_code(e.kind());
  }
}
