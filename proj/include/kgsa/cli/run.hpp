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

#include <iosfwd>
#include <string>
#include <vector>

#include "kgsa/cli/config.hpp"
#include "kgsa/cli/results.hpp"
#include "kgsa/error.hpp"

namespace kgsa::cli {

/// Exit status of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitDegenerate = 2,
  kExitAssumption = 3,
};

int exit_code_for(ErrorCode code);

/// Models reachable by name from --model.
const std::vector<std::string>& named_models();

/// Runs estimate, shapley or reproduce. verify-kernels goes through
/// verify_kernels instead.
RunResult run(const RunConfig& config);

struct KernelVerification {
  ZeroMeanCheck check;
  bool passed = false;
};

/// Zero-mean check of `config.kernel` under `config.marginal` at nine
/// quantile probes; passes when every |mean| is within 3 standard errors.
KernelVerification verify_kernels(const RunConfig& config);

/// Entry point of the `kgsa` executable.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace kgsa::cli
