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

#ifndef PRIVMARKET_ERRORS_H_
#define PRIVMARKET_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace privmarket {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidLabels,
  kInvalidData,
  kDimensionMismatch,
  kInvalidDistribution,
  kDegeneratePdf,
  kEmptyProfile,
  kInvalidEta,
  kInfeasibleCap,
  kDegenerateAllocation,
  kNoInteriorSolution,
  kNonMonotoneAllocation,
  kSolverDiverged,
  kMarginInfeasible,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace privmarket

#endif  // PRIVMARKET_ERRORS_H_
