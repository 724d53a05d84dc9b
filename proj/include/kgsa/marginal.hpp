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

#include <string>
#include <variant>
#include <vector>

#include "kgsa/rng.hpp"

namespace kgsa {

/// Nodes and weights such that sum_i w_i f(x_i) approximates E f(X).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre on [-1, 1] (weights sum to 2), via Golub-Welsch.
QuadratureRule gauss_legendre(int order);
/// Gauss-Hermite for the weight exp(-x^2) (weights sum to sqrt(pi)).
QuadratureRule gauss_hermite(int order);

inline constexpr int kMarginalQuadratureOrder = 64;

struct UniformDist {
  double a;
  double b;
};

struct NormalDist {
  double mu;
  double sd;
};

/// Equally weighted atoms, kept sorted.
struct EmpiricalDist {
  std::vector<double> values;
};

/// Univariate input law P_{X_l}.
class MarginalDist {
 public:
  using Variant = std::variant<UniformDist, NormalDist, EmpiricalDist>;

  static MarginalDist uniform(double a, double b);
  static MarginalDist normal(double mu, double sd);
  static MarginalDist empirical(std::vector<double> values);

  [[nodiscard]] const Variant& variant() const { return dist_; }
  [[nodiscard]] std::string describe() const;

  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double quantile(double u) const;
  [[nodiscard]] double sample(Rng& rng) const;
  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;

  /// 64-node Gauss-Legendre (Uniform), 64-node Gauss-Hermite (Normal), or the
  /// atoms themselves (Empirical). Weights sum to one.
  [[nodiscard]] const QuadratureRule& expectation_rule() const { return rule_; }

 private:
  explicit MarginalDist(Variant dist);

  Variant dist_;
  QuadratureRule rule_;
};

double standard_normal_cdf(double x);
double standard_normal_quantile(double u);

}  // namespace kgsa
