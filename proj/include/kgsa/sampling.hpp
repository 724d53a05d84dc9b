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

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kgsa/marginal.hpp"
#include "kgsa/output_value.hpp"
#include "kgsa/rng.hpp"
#include "kgsa/subset.hpp"

namespace kgsa {

/// n x d input design, one realization per row.
using InputMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const InputMatrix& x, Eigen::Index i) {
  return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
}

/// n joint realizations of d inputs with one output column.
struct SampleSet {
  InputMatrix inputs;
  std::vector<OutputValue> outputs;
  std::vector<std::string> input_names;
  std::string output_name = "y";

  [[nodiscard]] std::size_t n() const { return outputs.size(); }
  [[nodiscard]] int d() const { return static_cast<int>(inputs.cols()); }
  /// Copy of column l.
  [[nodiscard]] std::vector<double> column(int l) const;
  /// Throws Domain when shapes disagree or outputs mix kinds.
  void validate() const;
};

/// Numerical model y = eta(x). Stochastic models draw from the supplied
/// generator; deterministic ones ignore it. Evaluations are counted.
class Model {
 public:
  using Fn = std::function<OutputValue(std::span<const double>, Rng&)>;

  Model(int arity, Fn fn, std::string name = "model");

  OutputValue operator()(std::span<const double> x, Rng& rng) const;
  /// Evaluates every row; row i uses substream {kModel, i} of `stream`, so
  /// results do not depend on the thread count.
  [[nodiscard]] std::vector<OutputValue> evaluate_rows(const InputMatrix& x,
                                                       const Rng& stream) const;

  [[nodiscard]] int arity() const { return arity_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] std::uint64_t evaluations() const { return counter_->load(); }
  void reset_evaluations() const { counter_->store(0); }

 private:
  int arity_;
  Fn fn_;
  std::string name_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// Joint input law P_X.
class InputSampler {
 public:
  enum class Kind { Independent, GaussianCopula, Bootstrap };

  static InputSampler independent(std::vector<MarginalDist> marginals);
  /// Latent N(0, corr) mapped through the normal CDF and marginal quantiles.
  /// Throws NotPsd when corr has no Cholesky factor.
  static InputSampler gaussian_copula(Eigen::MatrixXd corr, std::vector<MarginalDist> marginals);
  /// Resamples rows of a given design with replacement.
  static InputSampler bootstrap(InputMatrix rows);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] int dim() const;
  [[nodiscard]] bool independent_inputs() const { return kind_ == Kind::Independent; }
  [[nodiscard]] bool supports_conditional() const { return kind_ != Kind::Bootstrap; }
  [[nodiscard]] const std::vector<MarginalDist>& marginals() const { return marginals_; }
  [[nodiscard]] const Eigen::MatrixXd& correlation() const { return corr_; }

  [[nodiscard]] InputMatrix sample(std::size_t n, Rng& rng) const;
  /// n draws from P_{X_{-A} | X_A = x_A}; columns in A are copied from `x`.
  [[nodiscard]] InputMatrix conditional_sample(Subset a, std::span<const double> x, std::size_t n,
                                               Rng& rng) const;

 private:
  InputSampler() = default;

  Kind kind_ = Kind::Independent;
  std::vector<MarginalDist> marginals_;
  Eigen::MatrixXd corr_;
  Eigen::MatrixXd chol_;
  InputMatrix rows_;
};

}  // namespace kgsa
