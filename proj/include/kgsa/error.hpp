/*
 * Copyright 2026 The kgsa Authors.
 *
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgsa {

enum class ErrorCode {
  Domain,              // argument outside the supported domain
  Unsupported,         // kernel/order/feature not implemented for this input
  VariantMismatch,     // output variant incompatible with a kernel or estimator
  DegenerateKernel,    // Durrande denominator vanishes
  DegenerateSample,    // all pairwise distances zero
  DegenerateOutput,    // normalizing constant is not positive
  AssumptionViolated,  // zero-mean input kernel check failed
  Capability,          // sampler cannot provide what the estimator needs
  IncompleteTable,     // closed-value table is missing a subset
  Infeasible,          // alignment band too narrow
  NotPsd,              // correlation matrix not positive definite
  Instability,         // ODE integration produced negative compartments
  TooLarge,            // subset enumeration or support beyond the cap
  Parse,               // CSV / config / kernel-string parse failure
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) raise(code, message);
}

}  // namespace kgsa
