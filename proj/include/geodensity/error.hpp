/* Copyright (C) 2026 The geodensity Authors
 * This program is Licensed under the Apache License, Version 2.0
 * (the "License"); you may not use this file except in compliance
 * with the License. See accompanying LICENSE file.
 */
#ifndef GEODENSITY_ERROR_HPP
#define GEODENSITY_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gd {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  Usage,       // bad arguments, violated preconditions (exit 1)
  Hypothesis,  // a mathematical hypothesis was not met (exit 2)
  Resolution,  // the grid cannot resolve the requested scale (exit 3)
  Io
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorKind::Usage, msg);
}

inline void require_resolved(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorKind::Resolution, msg);
}

} // namespace gd

#endif
