/*
 * Copyright (C) 2026 The fpclassify Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FPCLASSIFY_ERROR_HPP_
#define FPCLASSIFY_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpclassify {

enum class Errc {
  kEmptyApiName,
  kMalformedTrace,
  kMissingField,
  kUnknownGroundTruthId,
  kEmptyFingerprinterAttributes,
  kDuplicateScript,
  kEmptyMatrix,
  kAlreadyLabeled,
  kUnknownScript,
  kStaleSubmission,
  kInvalidLabel,
  kDecisionProviderFailure,
  kInvalidUrl,
  kIoFailure,
  kConsistencyError,
  kCorpusMismatch,
  kUnsupportedVersion,
  kCorruptSnapshot,
  kNoActiveSession,
  kInvalidInput,
};

inline std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kEmptyApiName: return "EmptyApiName";
    case Errc::kMalformedTrace: return "MalformedTrace";
    case Errc::kMissingField: return "MissingField";
    case Errc::kUnknownGroundTruthId: return "UnknownGroundTruthId";
    case Errc::kEmptyFingerprinterAttributes: return "EmptyFingerprinterAttributes";
    case Errc::kDuplicateScript: return "DuplicateScript";
    case Errc::kEmptyMatrix: return "EmptyMatrix";
    case Errc::kAlreadyLabeled: return "AlreadyLabeled";
    case Errc::kUnknownScript: return "UnknownScript";
    case Errc::kStaleSubmission: return "StaleSubmission";
    case Errc::kInvalidLabel: return "InvalidLabel";
    case Errc::kDecisionProviderFailure: return "DecisionProviderFailure";
    case Errc::kInvalidUrl: return "InvalidUrl";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kConsistencyError: return "ConsistencyError";
    case Errc::kCorpusMismatch: return "CorpusMismatch";
    case Errc::kUnsupportedVersion: return "UnsupportedVersion";
    case Errc::kCorruptSnapshot: return "CorruptSnapshot";
    case Errc::kNoActiveSession: return "NoActiveSession";
    case Errc::kInvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above; the
// message holds the offending id, field or path.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace fpclassify

#endif  // FPCLASSIFY_ERROR_HPP_
