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

#include <string_view>
#include <variant>
#include <vector>

namespace kgsa {

struct Categorical {
  int level = 0;
  friend bool operator==(const Categorical&, const Categorical&) = default;
};

/// Time series; times strictly increasing, one value per time.
struct Curve {
  std::vector<double> times;
  std::vector<double> values;
  friend bool operator==(const Curve&, const Curve&) = default;
};

/// Empirical distribution given by a bag of scalars.
struct DistSample {
  std::vector<double> values;
  friend bool operator==(const DistSample&, const DistSample&) = default;
};

using OutputValue = std::variant<double, Categorical, Curve, DistSample>;

enum class OutputKind { Scalar, Categorical, Curve, DistSample };

inline OutputKind kind_of(const OutputValue& value) {
  return static_cast<OutputKind>(value.index());
}

std::string_view to_string(OutputKind kind);

/// Checks the structural invariants (finite scalars, increasing times,
/// non-empty bags, non-negative levels). Throws Error(Domain).
void validate(const OutputValue& value);

Curve make_curve(std::vector<double> times, std::vector<double> values);
DistSample make_dist_sample(std::vector<double> values);

/// Scalar column as an output column.
std::vector<OutputValue> to_outputs(const std::vector<double>& scalars);
/// Extracts doubles; throws VariantMismatch on non-scalar entries.
std::vector<double> to_scalars(const std::vector<OutputValue>& outputs);

}  // namespace kgsa
