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
#include <map>
#include <string>
#include <vector>

#include "kgsa/estimators.hpp"
#include "kgsa/kernel.hpp"
#include "kgsa/shapley.hpp"
#include "kgsa/testbed.hpp"

namespace kgsa {

/// Seed of replicate r; replicates are independent of each other and of the
/// order in which they run.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r);

/// Per-replicate rows under named columns.
struct ReplicateTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

using EvalCounts = std::map<std::string, std::uint64_t>;

// ---------------------------------------------------------------------------
// Ishigami

struct IshigamiPickFreeze {
  std::vector<double> sobol_first;
  std::vector<double> sobol_total;
  std::vector<double> mmd_first;
  std::vector<double> mmd_total;
  std::uint64_t evaluations = 0;
};

/// Sobol and MMD first-order/total indices on one shared pick-freeze design
/// (4 inputs, the last a dummy). The output kernel bandwidth is resolved on
/// the first output block.
IshigamiPickFreeze ishigami_pick_freeze(std::size_t n, std::uint64_t seed,
                                        const KernelSpec& output_kernel =
                                            KernelSpec::gaussian_median());

/// Normalized first-order HSIC indices HSIC(X_l, Y) / HSIC(X, Y); Sobolev
/// (r = 1) input kernels under U(-pi, pi), Gaussian median output kernel.
std::vector<double> ishigami_hsic_first(std::size_t n, std::uint64_t seed,
                                        HsicFlavor flavor = HsicFlavor::V);

struct MmdEstimatorComparison {
  std::vector<double> rank;
  std::vector<double> knn;
  std::vector<double> double_loop;
};

/// Normalized first-order MMD indices of the Ishigami inputs by the rank and
/// kNN estimators (one sample of size cfg.n) and the double loop (n_dl outer,
/// m_dl inner draws).
MmdEstimatorComparison ishigami_mmd_estimators(const EstimatorConfig& cfg, std::size_t n_dl,
                                               std::size_t m_dl);

// ---------------------------------------------------------------------------
// Stochastic simulator

struct StochasticReplicate {
  /// Pick-freeze Sobol first-order indices of the inner mean.
  std::vector<double> sobol_mean_first;
  /// Rank-estimator MMD first-order indices, distribution kernel.
  std::vector<double> mmd_first;
  /// HSIC first-order indices, Sobolev inputs, distribution kernel.
  std::vector<double> hsic_first;
  std::uint64_t evaluations = 0;
};

StochasticReplicate stochastic_replicate(std::size_t n_sobol, std::size_t n_kernel,
                                         int inner_sample, std::uint64_t seed,
                                         const KernelSpec& output_kernel);
KernelSpec stochastic_default_kernel();

// ---------------------------------------------------------------------------
// SIR

struct SirReplicate {
  std::vector<double> hsic_infected;
  std::vector<double> hsic_reported;
  std::uint64_t evaluations = 0;
};

/// HSIC first-order indices for the I and R curves; Sobolev inputs under the
/// input ranges, alignment kernel on the outputs.
SirReplicate sir_replicate(std::size_t n, std::uint64_t seed, const KernelSpec& output_kernel,
                           HsicFlavor flavor = HsicFlavor::V);
KernelSpec sir_default_kernel();
/// Product of Sobolev kernels, each under its input's uniform range.
KernelSpec sir_input_kernel();

// ---------------------------------------------------------------------------
// Categorical model

struct CategoricalReplicate {
  std::vector<double> mmd_shapley;
  std::vector<double> hsic_shapley;
  bool hsic_degenerate = false;
  std::uint64_t evaluations = 0;
};

/// MMD-Shapley (kNN complementary values) and HSIC-Shapley (V-statistic,
/// Sobolev inputs), both with a Dirac output kernel.
CategoricalReplicate categorical_replicate(const CategoricalSynthetic& model,
                                           const EstimatorConfig& cfg);

/// Index of the largest entry (first on ties).
int argmax(const std::vector<double>& values);

}  // namespace kgsa
