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
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "kgsa/estimators.hpp"
#include "kgsa/subset.hpp"

namespace kgsa {

enum class ValueKind { VarianceClosed, MmdClosed, MmdComplementary, HsicClosed };

std::string_view to_string(ValueKind kind);

/// Set function val(A) over input subsets. Every subset value is computed at
/// most once and then reused, which keeps sum(effects) = val(full)/normalizer
/// exact even for noisy estimators.
class ValueFunction {
 public:
  ValueFunction(ValueKind kind, int d, std::function<double(Subset)> fn, double normalizer);

  /// Closed values from a complete table; normalizer = table.total().
  static ValueFunction from_table(ValueKind kind, const ClosedValueTable& table);

  /// Complementary values val'(A) with val'({}) = 0 and val'(full) = normalizer.
  static ValueFunction complementary(int d, std::function<double(Subset)> fn, double normalizer);

  double operator()(Subset a) const;
  /// Evaluates every subset up front. Subsets run in sequence; the estimators
  /// behind `fn` parallelize internally.
  void populate_all() const;

  [[nodiscard]] ValueKind kind() const { return kind_; }
  [[nodiscard]] int d() const { return d_; }
  [[nodiscard]] double normalizer() const { return normalizer_; }

 private:
  struct Cache;

  ValueKind kind_;
  int d_;
  std::function<double(Subset)> fn_;
  double normalizer_;
  std::shared_ptr<Cache> cache_;
};

enum class ShapleyMethod { ExactSubsets, Permutation };

struct ShapleyReport {
  std::vector<double> effects;
  ShapleyMethod method = ShapleyMethod::ExactSubsets;
  std::size_t num_perms = 0;
  ValueKind kind = ValueKind::VarianceClosed;
  double normalizer = 0.0;
  /// Some effect is negative (estimation noise); reported unclipped.
  bool negative_effects = false;
  /// The normalizer is not distinguishable from zero (HSIC permutation null).
  bool degenerate_normalizer = false;
};

inline constexpr int kMaxExactShapleyDimension = 14;

/// Subset-sum formula; throws TooLarge above d = 14.
ShapleyReport shapley_exact(const ValueFunction& val);

/// Average of marginal contributions along the given orders.
ShapleyReport shapley_orders(const ValueFunction& val, const std::vector<std::vector<int>>& orders);

/// Average over num_perms uniformly random orders.
ShapleyReport shapley_permutation(const ValueFunction& val, std::size_t num_perms,
                                  std::uint64_t seed);

/// Exact for d <= 14 unless num_perms is given.
ShapleyReport shapley(const ValueFunction& val, std::optional<std::size_t> num_perms = {},
                      std::uint64_t seed = 0);

/// MMD-Shapley from a given sample via the complementary kNN value function;
/// normalizer = mmd_total of the output Gram.
ShapleyReport mmd_shapley_knn(const SampleSet& sample, const KernelSpec& spec,
                              const EstimatorConfig& cfg,
                              std::optional<std::size_t> num_perms = {});

/// MMD-Shapley with double-loop closed values for every subset;
/// normalizer = val(full).
ShapleyReport mmd_shapley_double_loop(const Model& model, const InputSampler& sampler,
                                      const KernelSpec& spec, const EstimatorConfig& cfg,
                                      std::optional<std::size_t> num_perms = {});

/// Variance Shapley effects: the kNN complementary route with a linear kernel.
ShapleyReport variance_shapley(const SampleSet& sample, const EstimatorConfig& cfg,
                               std::optional<std::size_t> num_perms = {});

/// HSIC-Shapley from one sample; normalizer = HSIC(X, Y). The normalizer is
/// flagged degenerate when an output-permutation test (99 permutations) does
/// not reject independence at the 5% level.
ShapleyReport hsic_shapley(const SampleSet& sample, const KernelSpec& input_spec,
                           const KernelSpec& output_spec, const EstimatorConfig& cfg,
                           HsicFlavor flavor = HsicFlavor::V,
                           const std::vector<MarginalDist>& marginals = {},
                           std::optional<std::size_t> num_perms = {});

/// Permutation p-value of HSIC(X, Y) > 0 under output shuffles.
double hsic_permutation_pvalue(const HsicGrams& grams, HsicFlavor flavor, std::size_t num_perms,
                               std::uint64_t seed);

}  // namespace kgsa
