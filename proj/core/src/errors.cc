//
// Copyright 2026 The privmarket Authors
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

#include "privmarket/errors.h"

namespace privmarket {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kInvalidLabels:
      return "InvalidLabels";
    case ErrorCode::kInvalidData:
      return "InvalidData";
    case ErrorCode::kDimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::kInvalidDistribution:
      return "InvalidDistribution";
    case ErrorCode::kDegeneratePdf:
      return "DegeneratePdf";
    case ErrorCode::kEmptyProfile:
      return "EmptyProfile";
    case ErrorCode::kInvalidEta:
      return "InvalidEta";
    case ErrorCode::kInfeasibleCap:
      return "InfeasibleCap";
    case ErrorCode::kDegenerateAllocation:
      return "DegenerateAllocation";
    case ErrorCode::kNoInteriorSolution:
      return "NoInteriorSolution";
    case ErrorCode::kNonMonotoneAllocation:
      return "NonMonotoneAllocation";
    case ErrorCode::kSolverDiverged:
      return "SolverDiverged";
    case ErrorCode::kMarginInfeasible:
      return "MarginInfeasible";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace privmarket
