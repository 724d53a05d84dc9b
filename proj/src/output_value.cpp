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

#include "kgsa/output_value.hpp"

#include <cmath>
#include <string>

#include "kgsa/error.hpp"

namespace kgsa {

std::string_view to_string(OutputKind kind) {
  switch (kind) {
    case OutputKind::Scalar:
      return "scalar";
    case OutputKind::Categorical:
      return "categorical";
    case OutputKind::Curve:
      return "curve";
    case OutputKind::DistSample:
      return "distribution";
  }
  return "unknown";
}

void validate(const OutputValue& value) {
  if (const auto* s = std::get_if<double>(&value)) {
    require(std::isfinite(*s), ErrorCode::Domain, "scalar output is not finite");
  } else if (const auto* c = std::get_if<Categorical>(&value)) {
    require(c->level >= 0, ErrorCode::Domain, "categorical level is negative");
  } else if (const auto* curve = std::get_if<Curve>(&value)) {
    require(!curve->times.empty(), ErrorCode::Domain, "curve is empty");
    require(curve->times.size() == curve->values.size(), ErrorCode::Domain,
            "curve times and values differ in length");
    for (std::size_t i = 1; i < curve->times.size(); ++i) {
      require(curve->times[i] > curve->times[i - 1], ErrorCode::Domain,
              "curve times are not strictly increasing");
    }
    for (double v : curve->values) {
      require(std::isfinite(v), ErrorCode::Domain, "curve value is not finite");
    }
  } else {
    const auto& d = std::get<DistSample>(value);
    require(!d.values.empty(), ErrorCode::Domain, "distribution sample is empty");
    for (double v : d.values) {
      require(std::isfinite(v), ErrorCode::Domain, "distribution value is not finite");
    }
  }
}

Curve make_curve(std::vector<double> times, std::vector<double> values) {
  OutputValue value = Curve{std::move(times), std::move(values)};
  validate(value);
  return std::get<Curve>(std::move(value));
}

DistSample make_dist_sample(std::vector<double> values) {
  OutputValue value = DistSample{std::move(values)};
  validate(value);
  return std::get<DistSample>(std::move(value));
}

std::vector<OutputValue> to_outputs(const std::vector<double>& scalars) {
  return {scalars.begin(), scalars.end()};
}

std::vector<double> to_scalars(const std::vector<OutputValue>& outputs) {
  std::vector<double> result;
  result.reserve(outputs.size());
  for (const auto& y : outputs) {
    const auto* s = std::get_if<double>(&y);
    if (s == nullptr) {
      raise(ErrorCode::VariantMismatch,
            "expected scalar output, got " + std::string(to_string(kind_of(y))));
    }
    result.push_back(*s);
  }
  return result;
}

}  // namespace kgsa
