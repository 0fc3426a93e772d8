/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_RUNNER_HPP
#define GEODENSITY_RUNNER_HPP

// Executes a validated ExperimentConfig.  Every operation emits one record
//   {op, inputs, value, error_estimate, seed, config_hash, outputs, timing}
// and only `timing` may differ between two runs of the same config.

#include <string>
#include <vector>

#include "geodensity/config.hpp"
#include "geodensity/error.hpp"

namespace gd {

// 0 completed, 1 usage or I/O, 2 hypothesis not met, 3 resolution floor.
int exit_code(ErrorKind k);

struct RunOptions {
  bool write_files = true;  // events.ndjson, summary.csv, manifest.json under out_dir
};

struct RunResult {
  int exit_code = 0;
  std::string message;
  std::vector<Json> records;
  std::string config_hash;
};

RunResult run(const ExperimentConfig& cfg, const RunOptions& opt = {});

// Record without its `timing` field, dumped compactly.
std::string deterministic_line(const Json& record);

} // namespace gd

#endif
