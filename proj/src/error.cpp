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

#include "kgsa/error.hpp"

namespace kgsa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain:
      return "domain error";
    case ErrorCode::Unsupported:
      return "unsupported";
    case ErrorCode::VariantMismatch:
      return "variant mismatch";
    case ErrorCode::DegenerateKernel:
      return "degenerate kernel";
    case ErrorCode::DegenerateSample:
      return "degenerate sample";
    case ErrorCode::DegenerateOutput:
      return "degenerate output";
    case ErrorCode::AssumptionViolated:
      return "assumption violated";
    case ErrorCode::Capability:
      return "capability error";
    case ErrorCode::IncompleteTable:
      return "incomplete table";
    case ErrorCode::Infeasible:
      return "infeasible alignment";
    case ErrorCode::NotPsd:
      return "not positive semi-definite";
    case ErrorCode::Instability:
      return "numerical instability";
    case ErrorCode::TooLarge:
      return "too large";
    case ErrorCode::Parse:
      return "parse error";
    case ErrorCode::Io:
      return "i/o error";
  }
  return "error";
}

}  // namespace kgsa
