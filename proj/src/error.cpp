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

#include "availscope/error.hpp"

namespace availscope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kMalformedRecord: return "malformed_record";
    case ErrorCode::kNonFiniteValue: return "non_finite_value";
    case ErrorCode::kMissingField: return "missing_field";
    case ErrorCode::kFileUnreadable: return "file_unreadable";
    case ErrorCode::kBindFailure: return "bind_failure";
    case ErrorCode::kSeriesTooShort: return "series_too_short";
    case ErrorCode::kNonPositiveTolerance: return "non_positive_tolerance";
    case ErrorCode::kNoUsableMetric: return "no_usable_metric";
    case ErrorCode::kInsufficientRows: return "insufficient_rows";
    case ErrorCode::kAllColumnsDegenerate: return "all_columns_degenerate";
    case ErrorCode::kSingularSubmatrix: return "singular_submatrix";
    case ErrorCode::kTooFewSamples: return "too_few_samples";
    case ErrorCode::kEmptyWindow: return "empty_window";
    case ErrorCode::kEntryNotInTopology: return "entry_not_in_topology";
    case ErrorCode::kNoCompletedInterval: return "no_completed_interval";
    case ErrorCode::kNonAlternatingLog: return "non_alternating_log";
    case ErrorCode::kTooFewPoints: return "too_few_points";
    case ErrorCode::kMalformedXml: return "malformed_xml";
    case ErrorCode::kUnknownAction: return "unknown_action";
    case ErrorCode::kMissingElement: return "missing_element";
    case ErrorCode::kDuplicateName: return "duplicate_name";
    case ErrorCode::kUnknownMethod: return "unknown_method";
    case ErrorCode::kParamOutOfBounds: return "param_out_of_bounds";
    case ErrorCode::kInputKindMismatch: return "input_kind_mismatch";
    case ErrorCode::kInvalidSpec: return "invalid_spec";
    case ErrorCode::kDegenerateSpec: return "degenerate_spec";
    case ErrorCode::kInvalidConfig: return "invalid_config";
  }
  return "unknown";
}

}  // namespace availscope
