// Copyright 2026 The Entendre Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entendre {

enum class ErrorCode {
  kMalformedRecord,
  kMissingRequiredField,
  kUnknownKindValue,
  kIoError,
  kInvalidMapping,
  kMissingFeatureColumn,
  kConflictingLabels,
  kEmptyLabelSet,
  kUnknownUser,
  kEmptyMatrix,
  kSpecVersionMismatch,
  kEmptyNode,
  kSingleClassDataset,
  kEmptyDataset,
  kNoOobRows,
  kUnsupportedFormatVersion,
  kCorruptModelFile,
  kTooFewRowsPerClass,
  kTooFewTrials,
  kBudgetTooSmall,
  kUnknownPostId,
  kEmptyGraph,
  kAccountNotFound,
  kUpstreamUnavailable,
  kInvalidConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "malformed_record";
    case ErrorCode::kMissingRequiredField: return "missing_required_field";
    case ErrorCode::kUnknownKindValue: return "unknown_kind_value";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kInvalidMapping: return "invalid_mapping";
    case ErrorCode::kMissingFeatureColumn: return "missing_feature_column";
    case ErrorCode::kConflictingLabels: return "conflicting_labels";
    case ErrorCode::kEmptyLabelSet: return "empty_label_set";
    case ErrorCode::kUnknownUser: return "unknown_user";
    case ErrorCode::kEmptyMatrix: return "empty_matrix";
    case ErrorCode::kSpecVersionMismatch: return "spec_version_mismatch";
    case ErrorCode::kEmptyNode: return "empty_node";
    case ErrorCode::kSingleClassDataset: return "single_class_dataset";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kNoOobRows: return "no_oob_rows";
    case ErrorCode::kUnsupportedFormatVersion: return "unsupported_format_version";
    case ErrorCode::kCorruptModelFile: return "corrupt_model_file";
    case ErrorCode::kTooFewRowsPerClass: return "too_few_rows_per_class";
    case ErrorCode::kTooFewTrials: return "too_few_trials";
    case ErrorCode::kBudgetTooSmall: return "budget_too_small";
    case ErrorCode::kUnknownPostId: return "unknown_post_id";
    case ErrorCode::kEmptyGraph: return "empty_graph";
    case ErrorCode::kAccountNotFound: return "account_not_found";
    case ErrorCode::kUpstreamUnavailable: return "upstream_unavailable";
    case ErrorCode::kInvalidConfig: return "invalid_config";
  }
  return "unknown";
}

/// Every failure surfaced by the library carries one of the codes above so
/// callers (CLI, HTTP handlers) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace entendre
