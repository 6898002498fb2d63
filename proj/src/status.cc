/*
 * Copyright 2026 The SAL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sal/status.h"

namespace sal {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDatasetNotFound: return "dataset-not-found";
    case ErrorCode::kCorruptFormat: return "corrupt-format";
    case ErrorCode::kInvalidClass: return "invalid-class";
    case ErrorCode::kUnsupportedVersion: return "unsupported-version";
    case ErrorCode::kInvalidKernel: return "invalid-kernel";
    case ErrorCode::kTooSmall: return "too-small";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kDegenerateLabels: return "degenerate-labels";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kNotFitted: return "not-fitted";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
      code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace sal
