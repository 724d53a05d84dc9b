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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgsa/estimators.hpp"

namespace kgsa::cli {

enum class Command { Estimate, Shapley, Reproduce, VerifyKernels };

std::string_view to_string(Command command);
Command parse_command(std::string_view text);

struct RunConfig {
  Command command = Command::Estimate;
  /// reproduce: ishigami | stochastic | sir | categorical.
  std::string experiment;
  /// Named model (estimate/shapley); exclusive with `data`.
  std::string model;
  /// CSV sample (estimate/shapley); exclusive with `model`.
  std::string data;
  std::string output_column = "y";
  std::string output_kind = "scalar";
  std::vector<std::string> input_columns;
  /// Output kernel; empty picks a default for the output kind.
  std::string kernel_out;
  /// Input kernel for HSIC: one factor (used for every input) or a product.
  std::string kernel_in;
  /// double-loop | pick-freeze | rank | knn | hsic-u | hsic-v.
  std::string estimator;
  EstimatorConfig est;
  std::size_t reps = 1;
  /// reproduce stochastic: sample size of the kernel-based indices and inner
  /// sample size of the simulator.
  std::size_t n_kernel = 200;
  int inner = 100;
  /// Shapley permutation count; unset means exact subsets when d <= 14.
  std::optional<std::size_t> perms;
  std::string out_dir = ".";
  bool force = false;
  /// verify-kernels.
  std::string kernel;
  std::string marginal;
  int mc_n = 100000;

  /// Every field that influences numeric results; `out_dir` and `force` are
  /// excluded so that moving a run does not change its hash.
  [[nodiscard]] nlohmann::json to_json() const;
  /// Applies the keys present in `j`; unknown keys are a parse error.
  void apply_json(const nlohmann::json& j);
  /// Throws Domain on inconsistent settings.
  void validate() const;
};

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace kgsa::cli
