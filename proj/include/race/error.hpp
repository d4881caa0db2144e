//
// Copyright 2026 The RACE Sketch Authors
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
//

#ifndef RACE_ERROR_HPP_
#define RACE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace race {

enum class ErrorCode {
  kInvalidParameter,
  kDimensionMismatch,
  kZeroVector,
  kFrozenSketch,
  kIncompatibleSketch,
  kMalformedHeader,
  kVersionMismatch,
  kTruncated,
  kDoubleRelease,
  kInsufficientRows,
  kOptimizerDivergence,
  kParse,
  kNonFinite,
  kRaggedRow,
  kZeroRow,
  kEmptyClass,
  kIo,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kZeroVector: return "zero-vector";
    case ErrorCode::kFrozenSketch: return "frozen-sketch";
    case ErrorCode::kIncompatibleSketch: return "incompatible-sketch";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kDoubleRelease: return "double-release";
    case ErrorCode::kInsufficientRows: return "insufficient-rows";
    case ErrorCode::kOptimizerDivergence: return "optimizer-divergence";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNonFinite: return "non-finite-value";
    case ErrorCode::kRaggedRow: return "ragged-row";
    case ErrorCode::kZeroRow: return "zero-row";
    case ErrorCode::kEmptyClass: return "empty-class";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// Every failure in the library is reported as a race::Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void Require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

inline void RequireDim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected dimension " + std::to_string(want) + ", got " +
                    std::to_string(got));
  }
}

}  // namespace detail
}  // namespace race

#endif  // RACE_ERROR_HPP_
