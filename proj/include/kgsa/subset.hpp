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

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace kgsa {

inline constexpr int kMaxSubsetDimension = 24;

/// Set of input indices (0-based internally) stored as a bitmask.
struct Subset {
  std::uint32_t bits = 0;

  static Subset empty() { return {}; }
  static Subset singleton(int l) { return Subset{1u << l}; }
  static Subset full(int d) { return Subset{d >= 32 ? ~0u : (1u << d) - 1u}; }
  static Subset of(std::initializer_list<int> indices) {
    Subset s;
    for (int l : indices) s.bits |= 1u << l;
    return s;
  }

  [[nodiscard]] bool contains(int l) const { return (bits >> l) & 1u; }
  [[nodiscard]] Subset with(int l) const { return Subset{bits | (1u << l)}; }
  [[nodiscard]] Subset without(int l) const { return Subset{bits & ~(1u << l)}; }
  [[nodiscard]] Subset complement(int d) const { return Subset{full(d).bits & ~bits}; }
  [[nodiscard]] int size() const { return std::popcount(bits); }
  [[nodiscard]] bool is_empty() const { return bits == 0; }
  [[nodiscard]] std::vector<int> indices() const;
  /// 1-based display form, e.g. "{1,3}".
  [[nodiscard]] std::string label() const;

  friend bool operator==(Subset, Subset) = default;
};

/// Closed values val(A) for every subset A, plus the normalizing total.
/// Missing entries are NaN.
class ClosedValueTable {
 public:
  ClosedValueTable(int d, double total);

  [[nodiscard]] int d() const { return d_; }
  [[nodiscard]] double total() const { return total_; }
  void set_total(double total) { total_ = total; }
  void set(Subset a, double value);
  [[nodiscard]] bool has(Subset a) const;
  /// Throws IncompleteTable when the entry is missing.
  [[nodiscard]] double at(Subset a) const;
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

 private:
  int d_;
  double total_;
  std::vector<double> values_;
};

/// Pure (inclusion-exclusion) terms indexed by subset bits.
std::vector<double> mobius_combine(const ClosedValueTable& table);

struct IndexReport {
  int d = 0;
  double total = 0.0;
  /// Pure terms and their normalized values, by subset bits; empty when only
  /// first-order and total indices were estimated.
  std::vector<double> raw;
  std::vector<double> normalized;
  std::vector<double> first_order;
  std::vector<double> total_index;
  /// Set when some normalized term or first-order index is negative.
  bool negative_terms = false;
  std::vector<Subset> negative_subsets;
};

IndexReport normalize(const ClosedValueTable& table);

/// Report from per-input closed values val({l}) and val(-{l}) only.
IndexReport first_and_total(const std::vector<double>& closed_single,
                            const std::vector<double>& closed_complement, double total);

/// One-versus-all aggregated Sobol index of a categorical output:
/// sum_i E_X (P(Y=i|X) - P(Y=i))^2 / sum_i P(Y=i)(1 - P(Y=i)).
/// `state_probs[s]` is P(X = s); `level_probs[s][i]` is P(Y = i | X = s).
double categorical_one_vs_all(const std::vector<double>& state_probs,
                              const std::vector<std::vector<double>>& level_probs);

}  // namespace kgsa
