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
#include <span>
#include <vector>

#include "kgsa/kernel.hpp"
#include "kgsa/sampling.hpp"
#include "kgsa/subset.hpp"

namespace kgsa {

struct EstimatorConfig {
  std::size_t n = 1000;
  /// Inner sample size of the double loop.
  std::size_t m = 100;
  /// kNN anchor subsample size; 0 means min(n, 500).
  std::size_t n_a = 0;
  /// Neighbour count of the complementary kNN estimator.
  std::size_t n_i = 10;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t anchors(std::size_t sample_size) const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Double loop

struct DoubleLoopEstimate {
  /// E_{X_A} MMD^2(P_Y, P_{Y|X_A}).
  double closed = 0.0;
  /// mean diag - mean Gram over the marginal output sample.
  double total = 0.0;
};

/// Nested Monte Carlo with m marginal outputs and n outer draws of x_A, each
/// followed by m conditional outputs; (n + 1) m model evaluations. A = {} is
/// 0 by definition and costs nothing.
DoubleLoopEstimate double_loop_mmd(const Model& model, const InputSampler& sampler, Subset a,
                                   const KernelSpec& spec, const EstimatorConfig& cfg);

// ---------------------------------------------------------------------------
// Pick-freeze

struct PickFreezeDesign {
  InputMatrix x;
  InputMatrix x_prime;
  /// x_tilde[l]: column l from x, all others from x_prime.
  std::vector<InputMatrix> x_tilde;
};

/// Capability error for dependent samplers.
PickFreezeDesign pick_freeze_design(const InputSampler& sampler, std::size_t n,
                                    std::uint64_t seed);

struct PickFreezeOutputs {
  std::vector<OutputValue> y;
  std::vector<OutputValue> y_prime;
  std::vector<std::vector<OutputValue>> y_tilde;
};

/// (d + 2) n model evaluations.
PickFreezeOutputs evaluate_design(const Model& model, const PickFreezeDesign& design,
                                  std::uint64_t seed);

struct PickFreezeSobol {
  double v_l = 0.0;
  double v_minus_l = 0.0;
  double v = 0.0;
};

PickFreezeSobol saltelli_sobol(const PickFreezeOutputs& outputs, int l);

struct PickFreezeMmd {
  double m_l = 0.0;
  double m_minus_l = 0.0;
  double m_tot = 0.0;
};

PickFreezeMmd pick_freeze_mmd(const PickFreezeOutputs& outputs, int l, const KernelSpec& spec);

/// mean diag - mean of all entries.
double mmd_total(const GramMatrix& gram);

// ---------------------------------------------------------------------------
// Given-data estimators

/// N(i) = pi^{-1}(pi(i) + 1) with wraparound, 0-based; ties by original index.
std::vector<std::size_t> rank_permutation(std::span<const double> values);

double rank_mmd(const GramMatrix& gram, std::span<const double> column);
double rank_mmd(const SampleSet& sample, int l, const KernelSpec& spec);

/// Indices of the k nearest rows to `anchor` (itself first) under the
/// standardized Euclidean metric on columns A, ties by smallest index.
std::vector<std::size_t> nearest_neighbors(const InputMatrix& x, Subset a, std::size_t anchor,
                                           std::size_t k);

/// Anchor indices s(1..n_A), uniform with replacement, from cfg.seed.
std::vector<std::size_t> knn_anchors(std::size_t n, const EstimatorConfig& cfg);

double knn_closed_value(const GramMatrix& gram, const InputMatrix& x, Subset a,
                        const EstimatorConfig& cfg);
double knn_closed_value(const SampleSet& sample, Subset a, const KernelSpec& spec,
                        const EstimatorConfig& cfg);

/// E_{X_{-A}}[E k(xi, xi) - E k(xi, xi')], xi, xi' ~ P_{Y|X_{-A}}, from the
/// n_I nearest neighbours in columns -A. For A = full the whole sample is used,
/// which gives mmd_total exactly.
double knn_complementary_value(const GramMatrix& gram, const InputMatrix& x, Subset a,
                               const EstimatorConfig& cfg);
double knn_complementary_value(const SampleSet& sample, Subset a, const KernelSpec& spec,
                               const EstimatorConfig& cfg);

// ---------------------------------------------------------------------------
// HSIC

enum class HsicFlavor { U, V };

/// Per-factor input Grams and the output Gram of one sample.
struct HsicGrams {
  std::vector<GramMatrix> inputs;
  GramMatrix output;
};

/// Probe-based Monte Carlo check of every factor of a product kernel under
/// its marginal. Throws AssumptionViolated when some |mean| exceeds `tol`.
void require_zero_mean_inputs(const KernelSpec& input_spec,
                              const std::vector<MarginalDist>& marginals, double tol = 0.01,
                              std::uint64_t seed = 0);

/// Marginal each factor is zero-mean for, when the factor names one.
std::optional<MarginalDist> natural_marginal(const KernelSpec& factor);

/// Builds the Grams after checking the zero-mean property against
/// `marginals` (or each factor's natural marginal when empty). Unset output
/// bandwidths are resolved from the sample.
HsicGrams hsic_grams(const SampleSet& sample, const KernelSpec& input_spec,
                     const KernelSpec& output_spec,
                     const std::vector<MarginalDist>& marginals = {});
/// Same, with an output Gram computed elsewhere.
HsicGrams hsic_grams(const SampleSet& sample, const KernelSpec& input_spec, GramMatrix output_gram,
                     const std::vector<MarginalDist>& marginals = {});

/// HSIC(X_A, Y) with input kernel k_A - 1 = prod_{l in A}(1 + k_l) - 1.
double hsic_stat(const HsicGrams& grams, Subset a, HsicFlavor flavor);
double hsic_stat(const SampleSet& sample, Subset a, const KernelSpec& input_spec,
                 const KernelSpec& output_spec, HsicFlavor flavor,
                 const std::vector<MarginalDist>& marginals = {});

/// Pure term with input kernel prod_{l in A} k_l.
double hsic_pure_stat(const HsicGrams& grams, Subset a, HsicFlavor flavor);

/// Closed HSIC values for every subset, total = HSIC(X, Y).
ClosedValueTable hsic_table(const HsicGrams& grams, HsicFlavor flavor);

}  // namespace kgsa
