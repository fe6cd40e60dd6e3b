// Copyright 2026 The SimA Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simalab {

enum class ErrorKind {
  kConfig,
  kIndex,
  kRange,
  kParameter,
  kShape,
  kDegenerateKernel,
  kUnsupportedDimension,
  kDivergence,
  kMetricUndefined,
  kIo,
};

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kDegenerateKernel: return "degenerate_kernel";
    case ErrorKind::kUnsupportedDimension: return "unsupported_dimension";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kMetricUndefined: return "metric_undefined";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

// Every failure raised by the library. `kind()` is stable and is what the CLI
// prints in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-finite training loss. Carries the optimizer step at which it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t step, const std::string& message)
      : Error(ErrorKind::kDivergence,
              message + " (step " + std::to_string(step) + ")"),
        step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace simalab
