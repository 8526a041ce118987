/*
 * Copyright 2026 The vgsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace vgsim {

// Numeric values are part of the C API (see vgsim.h) and must stay stable.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Io = 2,
  Parse = 3,
  DimensionMismatch = 4,
  NotFound = 5,
  Duplicate = 6,
  Singular = 7,
  NoUsableLabels = 8,
  Convergence = 9,
  Separation = 10,
  Divergence = 11,
  Validation = 12,
  Internal = 13,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace vgsim
