// Copyright 2026 The Availscope Authors
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

#ifndef AVAILSCOPE_ERROR_HPP_
#define AVAILSCOPE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace availscope {

// Every domain failure raised by the library carries one of these codes.
// The snake_case spelling returned by to_string() is what the HTTP API and
// the CLI report to clients.
enum class ErrorCode {
  kInvalidArgument,
  kEmptyInput,
  kMalformedRecord,
  kNonFiniteValue,
  kMissingField,
  kFileUnreadable,
  kBindFailure,
  kSeriesTooShort,
  kNonPositiveTolerance,
  kNoUsableMetric,
  kInsufficientRows,
  kAllColumnsDegenerate,
  kSingularSubmatrix,
  kTooFewSamples,
  kEmptyWindow,
  kEntryNotInTopology,
  kNoCompletedInterval,
  kNonAlternatingLog,
  kTooFewPoints,
  kMalformedXml,
  kUnknownAction,
  kMissingElement,
  kDuplicateName,
  kUnknownMethod,
  kParamOutOfBounds,
  kInputKindMismatch,
  kInvalidSpec,
  kDegenerateSpec,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace availscope

#endif  // AVAILSCOPE_ERROR_HPP_
