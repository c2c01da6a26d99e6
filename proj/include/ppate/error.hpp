//
// Copyright 2026 The ppate Authors.
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

#ifndef PPATE_ERROR_HPP_
#define PPATE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppate {

// Machine-readable failure classes. The CLI maps each one to its own exit
// code and prints the name in front of the message.
enum class ErrorCategory {
  kInvalidParameter,
  kGridMismatch,
  kEmptyInput,
  kInvalidVote,
  kPlanInfeasible,
  kParseError,
  kDimensionMismatch,
  kIoError,
};

inline std::string_view CategoryName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidParameter:
      return "invalid-parameter";
    case ErrorCategory::kGridMismatch:
      return "grid-mismatch";
    case ErrorCategory::kEmptyInput:
      return "empty-input";
    case ErrorCategory::kInvalidVote:
      return "invalid-vote";
    case ErrorCategory::kPlanInfeasible:
      return "plan-infeasible";
    case ErrorCategory::kParseError:
      return "parse-error";
    case ErrorCategory::kDimensionMismatch:
      return "dimension-mismatch";
    case ErrorCategory::kIoError:
      return "io-error";
  }
  return "unknown";
}

// Process exit code for a category; 0 is reserved for success and 1 for
// command-line usage errors.
inline int ExitCode(ErrorCategory category) {
  return 10 + static_cast<int>(category);
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void Fail(ErrorCategory category,
                              const std::string& message) {
  throw Error(category, message);
}

inline void Require(bool condition, ErrorCategory category,
                    const std::string& message) {
  if (!condition) Fail(category, message);
}

}  // namespace ppate

#endif  // PPATE_ERROR_HPP_
