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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "kgsa/marginal.hpp"
#include "kgsa/output_value.hpp"

namespace kgsa {

class KernelSpec;

/// k(y, y') = y y'.
struct LinearKernel {};

/// exp(-|y - y'|^2 / (2 sigma^2)) on scalars or equal-length curves.
/// sigma == 0 marks a bandwidth still to be set by the median heuristic.
struct GaussianKernel {
  double sigma = 0.0;
};

/// 1{y = y'} on categorical levels in [0, num_levels).
struct DiracKernel {
  int num_levels = 0;
};

/// Bernoulli-polynomial kernel of order r on [0, 1]. When a marginal is set,
/// inputs are first mapped through its CDF so that the kernel is zero-mean
/// under that marginal.
struct SobolevKernel {
  int r = 1;
  std::optional<MarginalDist> marginal;
};

/// Base kernel with its mean embedding projected out under `marginal`.
struct DurrandeKernel {
  std::shared_ptr<const KernelSpec> base;
  MarginalDist marginal;
  double double_integral = 0.0;  // E k(S, T), S, T independent from the marginal
};

struct ScoreFunction {
  std::string name;
  std::function<double(double)> fn;
};

/// Score of N(mu, sd^2): -(x - mu) / sd^2.
ScoreFunction normal_score(double mu = 0.0, double sd = 1.0);

/// Stein-operator kernel built from a differentiable base and a score p'/p.
struct SteinKernel {
  std::shared_ptr<const KernelSpec> base;
  ScoreFunction score;
};

/// sigma2 exp(-lambda MMD^2(P, Q)) on empirical distributions, MMD under `inner`.
/// lambda == 0 marks a parameter still to be set by the median heuristic.
struct DistributionEmbeddingKernel {
  double sigma2 = 1.0;
  double lambda = 0.0;
  std::shared_ptr<const KernelSpec> inner;
};

/// sigma2 exp(-lambda W_2^2(P, Q)) on 1-D empirical distributions.
struct WassersteinEmbeddingKernel {
  double sigma2 = 1.0;
  double lambda = 0.0;
};

/// Normalized global alignment kernel between curves.
/// inner_bandwidth == 0 marks a bandwidth still to be set from the sample.
struct GlobalAlignmentKernel {
  double inner_bandwidth = 0.0;
  std::optional<int> band;
};

/// Input kernel prod_l (1 + k_l(x_l, x'_l)) over zero-mean factors.
struct ProductZeroMeanKernel {
  std::vector<KernelSpec> factors;
};

class KernelSpec {
 public:
  using Variant =
      std::variant<LinearKernel, GaussianKernel, DiracKernel, SobolevKernel, DurrandeKernel,
                   SteinKernel, DistributionEmbeddingKernel, WassersteinEmbeddingKernel,
                   GlobalAlignmentKernel, ProductZeroMeanKernel>;

  KernelSpec() : kind_(LinearKernel{}) {}

  static KernelSpec linear();
  static KernelSpec gaussian(double sigma);
  /// Gaussian kernel whose bandwidth is resolved later from data.
  static KernelSpec gaussian_median();
  static KernelSpec dirac(int num_levels);
  static KernelSpec sobolev(int r, std::optional<MarginalDist> marginal = std::nullopt);
  static KernelSpec durrande(const KernelSpec& base, const MarginalDist& marginal);
  static KernelSpec stein(const KernelSpec& base, ScoreFunction score);
  static KernelSpec distribution_embedding(double sigma2, double lambda, const KernelSpec& inner);
  static KernelSpec wasserstein_embedding(double sigma2, double lambda);
  static KernelSpec global_alignment(double inner_bandwidth, std::optional<int> band = {});
  static KernelSpec product_zero_mean(std::vector<KernelSpec> factors);

  [[nodiscard]] const Variant& variant() const { return kind_; }
  template <typename T>
  [[nodiscard]] const T* get_if() const {
    return std::get_if<T>(&kind_);
  }

  /// Short kind name, e.g. "gaussian".
  [[nodiscard]] std::string_view kind_name() const;
  /// Canonical text form; round-trips through parse_kernel_spec for every kind
  /// except Stein kernels with custom score functions.
  [[nodiscard]] std::string describe() const;
  /// True when some bandwidth-like parameter is still unset.
  [[nodiscard]] bool needs_resolution() const;

 private:
  explicit KernelSpec(Variant kind) : kind_(std::move(kind)) {}
  Variant kind_;
};

/// Parses "name[:key=value,...]"; nested kernels and marginals go in
/// parentheses, e.g. "durrande:base=(gaussian:sigma=1),marginal=(uniform:0,1)".
KernelSpec parse_kernel_spec(std::string_view text);
/// "uniform:a,b", "normal:mu,sd".
MarginalDist parse_marginal(std::string_view text);

using GramMatrix = Eigen::MatrixXd;

double eval_kernel(const KernelSpec& spec, const OutputValue& a, const OutputValue& b);
double eval_kernel(const KernelSpec& spec, double a, double b);

/// prod_l (1 + k_l(a_l, b_l)) over the factors listed in `active`; the
/// HSIC input kernel k_A for A = active.
double eval_product_kernel(const KernelSpec& spec, std::span<const double> a,
                           std::span<const double> b, std::span<const int> active);

double bernoulli_polynomial(int degree, double x);
double sobolev_kernel(int r, double x, double x2);
double durrande_zero_mean(const KernelSpec& base, const MarginalDist& marginal, double x,
                          double x2);
double stein_zero_mean(const KernelSpec& base, const ScoreFunction& score, double x, double x2);
double global_alignment_kernel(const Curve& a, const Curve& b, double inner_bandwidth,
                               std::optional<int> band = {});
/// Squared 2-Wasserstein distance between the empirical laws of two bags.
double wasserstein2_squared(std::span<const double> a, std::span<const double> b);

/// Gram matrix over an output column; the upper triangle is computed once
/// and mirrored.
GramMatrix gram(const KernelSpec& spec, std::span<const OutputValue> column);
/// Rectangular matrix k(p_i, q_j).
GramMatrix cross_gram(const KernelSpec& spec, std::span<const OutputValue> p,
                      std::span<const OutputValue> q);
/// Gram matrix of a 1-D input kernel over a scalar column.
GramMatrix gram(const KernelSpec& spec, std::span<const double> column);

enum class Metric { Euclidean, Mmd, Wasserstein2 };

/// Lower median of the n(n-1)/2 pairwise distances. For Mmd the "distance" is
/// MMD^2 under `inner`, for Wasserstein2 it is W_2^2.
double median_heuristic(std::span<const OutputValue> column, Metric metric,
                        const KernelSpec* inner = nullptr);

/// Fills unset bandwidths from the column: Gaussian sigma = median distance,
/// distribution-embedding lambda = median pairwise MMD^2 (inner bandwidth
/// resolved first on the pooled bag values), Wasserstein lambda = median W_2^2,
/// alignment bandwidth = median pointwise distance between curves.
KernelSpec resolve_bandwidths(const KernelSpec& spec, std::span<const OutputValue> column);

/// resolve_bandwidths followed by gram. For a distribution kernel with an
/// unset lambda the pairwise MMD^2 values are computed once and reused.
GramMatrix resolve_and_gram(const KernelSpec& spec, std::span<const OutputValue> column,
                            KernelSpec* resolved = nullptr);

/// Biased (V) or unbiased (U) squared MMD between two samples.
double mmd2(std::span<const OutputValue> p, std::span<const OutputValue> q,
            const KernelSpec& spec, bool unbiased = false);

struct ZeroMeanCheck {
  double max_abs_mean = 0.0;
  /// Monte Carlo standard error at the probe attaining the worst ratio.
  double standard_error = 0.0;
  /// max over probes of |mean| / standard error.
  double max_ratio = 0.0;
};

/// Monte Carlo estimate of E_{t ~ P} k(x, t) at each probe point.
ZeroMeanCheck verify_zero_mean(const KernelSpec& spec, const MarginalDist& marginal,
                               std::span<const double> probe_points, int mc_n,
                               std::uint64_t seed);

}  // namespace kgsa
