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

#include "kgsa/output_value.hpp"
#include "kgsa/sampling.hpp"

namespace kgsa::cli {

struct CsvSchema {
  /// Empty: every column that is not part of the output.
  std::vector<std::string> input_columns;
  std::string output_column = "y";
  /// Scalar: plain number. Categorical: non-negative integer. DistSample: one
  /// cell holding values separated by ';' (usually quoted). Curve: columns
  /// named <output_column>_t<time>.
  OutputKind output_kind = OutputKind::Scalar;
};

OutputKind parse_output_kind(std::string_view text);

/// Parse errors carry the 1-based line number.
SampleSet read_sample_csv(std::istream& in, const CsvSchema& schema);
SampleSet read_sample_csv(const std::string& path, const CsvSchema& schema);

/// Writes numbers with 17 significant digits, so reading back is lossless.
void write_sample_csv(std::ostream& out, const SampleSet& sample);

/// Splits one CSV record; double quotes group, "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line);

std::string format_double(double value);

}  // namespace kgsa::cli
