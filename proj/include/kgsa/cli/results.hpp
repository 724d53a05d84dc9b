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
#include <string>
#include <vector>

#include <json.hpp>

#include "kgsa/experiments.hpp"

namespace kgsa::cli {

/// Statistics over the finite entries of one column; quartiles by linear
/// interpolation, std with the n - 1 denominator (0 for a single value).
struct ColumnSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

ColumnSummary summarize(const std::vector<double>& values);

struct RunResult {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<ReplicateTable> tables;
  /// Flags and diagnostics per replicate, merged into the replicate records.
  std::vector<nlohmann::json> replicate_extras;
  /// Tables written as plain CSV, outside the replicate records.
  std::vector<ReplicateTable> artifacts;
  EvalCounts eval_counts;
  /// Some replicate has an output with no spread to attribute.
  bool degenerate = false;
};

/// {table: {column: {count, mean, std, q25, q50, q75}}}.
nlohmann::json summary_json(const std::vector<ReplicateTable>& tables);

nlohmann::json results_json(const RunResult& result, const std::string& timestamp);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Writes results.json and one <table>.csv per table into `out_dir`. Refuses
/// with an Io error when results.json there carries another config hash,
/// unless `force` is set.
void write_results(const RunResult& result, const std::string& out_dir, bool force);

}  // namespace kgsa::cli
