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

#include "kgsa/subset.hpp"

#include <cmath>
#include <limits>

#include "kgsa/error.hpp"

namespace kgsa {

std::vector<int> Subset::indices() const {
  std::vector<int> out;
  for (std::uint32_t b = bits; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

std::string Subset::label() const {
  std::string s = "{";
  bool first = true;
  for (int l : indices()) {
    if (!first) s += ",";
    s += std::to_string(l + 1);
    first = false;
  }
  return s + "}";
}

ClosedValueTable::ClosedValueTable(int d, double total) : d_(d), total_(total) {
  require(d >= 1, ErrorCode::Domain, "subset table needs d >= 1");
  require(d <= kMaxSubsetDimension, ErrorCode::TooLarge,
          "exhaustive subset tables are capped at d = " + std::to_string(kMaxSubsetDimension));
  values_.assign(std::size_t{1} << d, std::numeric_limits<double>::quiet_NaN());
  values_[0] = 0.0;
}

void ClosedValueTable::set(Subset a, double value) {
  require(a.bits < values_.size(), ErrorCode::Domain, "subset outside the table dimension");
  require(!a.is_empty() || value == 0.0, ErrorCode::Domain, "closed value of the empty set is 0");
  values_[a.bits] = value;
}

bool ClosedValueTable::has(Subset a) const {
  return a.bits < values_.size() && !std::isnan(values_[a.bits]);
}

double ClosedValueTable::at(Subset a) const {
  require(has(a), ErrorCode::IncompleteTable, "closed value missing for subset " + a.label());
  return values_[a.bits];
}

std::vector<double> mobius_combine(const ClosedValueTable& table) {
  std::vector<double> v = table.values();
  for (std::uint32_t bits = 0; bits < v.size(); ++bits) {
    require(!std::isnan(v[bits]), ErrorCode::IncompleteTable,
            "closed value missing for subset " + Subset{bits}.label());
  }
  // Finite differences along each coordinate in ascending order.
  for (int l = 0; l < table.d(); ++l) {
    const std::uint32_t bit = 1u << l;
    for (std::uint32_t bits = 0; bits < v.size(); ++bits) {
      if (bits & bit) v[bits] -= v[bits ^ bit];
    }
  }
  return v;
}

IndexReport normalize(const ClosedValueTable& table) {
  require(table.total() > 0.0, ErrorCode::DegenerateOutput,
          "normalizing total is not positive (constant output?)");
  IndexReport report;
  report.d = table.d();
  report.total = table.total();
  report.raw = mobius_combine(table);
  report.normalized.resize(report.raw.size());
  for (std::size_t bits = 0; bits < report.raw.size(); ++bits) {
    report.normalized[bits] = report.raw[bits] / table.total();
    if (bits != 0 && report.normalized[bits] < 0.0) {
      report.negative_terms = true;
      report.negative_subsets.push_back(Subset{static_cast<std::uint32_t>(bits)});
    }
  }
  const Subset full = Subset::full(table.d());
  for (int l = 0; l < table.d(); ++l) {
    report.first_order.push_back(report.normalized[Subset::singleton(l).bits]);
    report.total_index.push_back(1.0 - table.at(full.without(l)) / table.total());
  }
  return report;
}

IndexReport first_and_total(const std::vector<double>& closed_single,
                            const std::vector<double>& closed_complement, double total) {
  require(closed_single.size() == closed_complement.size(), ErrorCode::Domain,
          "first-order and complement value lists differ in length");
  require(total > 0.0, ErrorCode::DegenerateOutput,
          "normalizing total is not positive (constant output?)");
  IndexReport report;
  report.d = static_cast<int>(closed_single.size());
  report.total = total;
  for (int l = 0; l < report.d; ++l) {
    const double first = closed_single[l] / total;
    report.first_order.push_back(first);
    report.total_index.push_back(1.0 - closed_complement[l] / total);
    if (first < 0.0) {
      report.negative_terms = true;
      report.negative_subsets.push_back(Subset::singleton(l));
    }
  }
  return report;
}

double categorical_one_vs_all(const std::vector<double>& state_probs,
                              const std::vector<std::vector<double>>& level_probs) {
  require(!state_probs.empty() && state_probs.size() == level_probs.size(), ErrorCode::Domain,
          "one-vs-all index needs one level distribution per state");
  const std::size_t k = level_probs.front().size();
  std::vector<double> marginal(k, 0.0);
  for (std::size_t s = 0; s < state_probs.size(); ++s) {
    require(level_probs[s].size() == k, ErrorCode::Domain, "ragged level probabilities");
    for (std::size_t i = 0; i < k; ++i) {
      const double p = level_probs[s][i];
      require(p >= 0.0 && p <= 1.0, ErrorCode::Domain, "probability outside [0,1]");
      marginal[i] += state_probs[s] * p;
    }
  }
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t s = 0; s < state_probs.size(); ++s) {
      const double diff = level_probs[s][i] - marginal[i];
      numerator += state_probs[s] * diff * diff;
    }
    denominator += marginal[i] * (1.0 - marginal[i]);
  }
  require(denominator > 0.0, ErrorCode::DegenerateOutput,
          "every level has probability 0 or 1; the one-vs-all index is undefined");
  return numerator / denominator;
}

}  // namespace kgsa
