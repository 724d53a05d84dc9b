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

#include "kgsa/sampling.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "kgsa/error.hpp"
#include "kgsa/parallel.hpp"

namespace kgsa {

namespace {

constexpr double kUnitClamp = 1e-15;

double clamp_unit(double u) { return std::clamp(u, kUnitClamp, 1.0 - kUnitClamp); }

// Symmetric square root of a PSD matrix; tolerates rank deficiency.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

std::vector<double> SampleSet::column(int l) const {
  std::vector<double> out(static_cast<std::size_t>(inputs.rows()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) out[i] = inputs(i, l);
  return out;
}

void SampleSet::validate() const {
  require(static_cast<std::size_t>(inputs.rows()) == outputs.size(), ErrorCode::Domain,
          "input rows and outputs differ in count");
  require(!outputs.empty(), ErrorCode::Domain, "empty sample");
  require(input_names.empty() || static_cast<int>(input_names.size()) == d(), ErrorCode::Domain,
          "input names do not match the input columns");
  for (const auto& y : outputs) {
    require(y.index() == outputs.front().index(), ErrorCode::VariantMismatch,
            "output column mixes kinds");
  }
}

Model::Model(int arity, Fn fn, std::string name)
    : arity_(arity),
      fn_(std::move(fn)),
      name_(std::move(name)),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  require(arity >= 1, ErrorCode::Domain, "model arity must be positive");
  require(static_cast<bool>(fn_), ErrorCode::Domain, "model function is empty");
}

OutputValue Model::operator()(std::span<const double> x, Rng& rng) const {
  require(static_cast<int>(x.size()) == arity_, ErrorCode::Domain,
          "model '" + name_ + "' expects " + std::to_string(arity_) + " inputs");
  counter_->fetch_add(1, std::memory_order_relaxed);
  return fn_(x, rng);
}

std::vector<OutputValue> Model::evaluate_rows(const InputMatrix& x, const Rng& stream) const {
  std::vector<OutputValue> out(static_cast<std::size_t>(x.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    Rng rng = stream.substream({stream_tag::kModel, i});
    out[i] = (*this)(row_span(x, static_cast<Eigen::Index>(i)), rng);
  });
  return out;
}

InputSampler InputSampler::independent(std::vector<MarginalDist> marginals) {
  require(!marginals.empty(), ErrorCode::Domain, "sampler needs at least one input");
  InputSampler s;
  s.kind_ = Kind::Independent;
  s.marginals_ = std::move(marginals);
  return s;
}

InputSampler InputSampler::gaussian_copula(Eigen::MatrixXd corr,
                                           std::vector<MarginalDist> marginals) {
  const auto d = static_cast<Eigen::Index>(marginals.size());
  require(d >= 1, ErrorCode::Domain, "sampler needs at least one input");
  require(corr.rows() == d && corr.cols() == d, ErrorCode::Domain,
          "correlation matrix does not match the number of marginals");
  for (Eigen::Index i = 0; i < d; ++i) {
    require(std::fabs(corr(i, i) - 1.0) < 1e-12, ErrorCode::NotPsd,
            "correlation matrix must have a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      require(corr(i, j) == corr(j, i), ErrorCode::NotPsd, "correlation matrix is not symmetric");
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  require(llt.info() == Eigen::Success, ErrorCode::NotPsd,
          "correlation matrix is not positive definite (Cholesky failed)");
  InputSampler s;
  s.kind_ = Kind::GaussianCopula;
  s.marginals_ = std::move(marginals);
  s.corr_ = std::move(corr);
  s.chol_ = llt.matrixL();
  return s;
}

InputSampler InputSampler::bootstrap(InputMatrix rows) {
  require(rows.rows() >= 1 && rows.cols() >= 1, ErrorCode::Domain, "bootstrap needs rows");
  InputSampler s;
  s.kind_ = Kind::Bootstrap;
  for (Eigen::Index l = 0; l < rows.cols(); ++l) {
    std::vector<double> col(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) col[i] = rows(i, l);
    s.marginals_.push_back(MarginalDist::empirical(std::move(col)));
  }
  s.rows_ = std::move(rows);
  return s;
}

int InputSampler::dim() const { return static_cast<int>(marginals_.size()); }

InputMatrix InputSampler::sample(std::size_t n, Rng& rng) const {
  const int d = dim();
  InputMatrix x(static_cast<Eigen::Index>(n), d);
  switch (kind_) {
    case Kind::Independent:
      for (std::size_t i = 0; i < n; ++i) {
        for (int l = 0; l < d; ++l) x(i, l) = marginals_[l].sample(rng);
      }
      break;
    case Kind::GaussianCopula: {
      Eigen::VectorXd g(d);
      for (std::size_t i = 0; i < n; ++i) {
        for (int l = 0; l < d; ++l) g(l) = rng.normal();
        const Eigen::VectorXd z = chol_ * g;
        for (int l = 0; l < d; ++l) {
          x(i, l) = marginals_[l].quantile(clamp_unit(standard_normal_cdf(z(l))));
        }
      }
      break;
    }
    case Kind::Bootstrap:
      for (std::size_t i = 0; i < n; ++i) {
        x.row(static_cast<Eigen::Index>(i)) = rows_.row(static_cast<Eigen::Index>(
            rng.index(static_cast<std::uint64_t>(rows_.rows()))));
      }
      break;
  }
  return x;
}

InputMatrix InputSampler::conditional_sample(Subset a, std::span<const double> x, std::size_t n,
                                             Rng& rng) const {
  const int d = dim();
  require(static_cast<int>(x.size()) == d, ErrorCode::Domain,
          "conditioning point has the wrong dimension");
  require(supports_conditional() || a.is_empty(), ErrorCode::Capability,
          "bootstrap sampler cannot draw from conditional input laws");
  InputMatrix out = sample(n, rng);
  if (a.is_empty()) return out;
  const std::vector<int> fixed = a.indices();
  const std::vector<int> free = a.complement(d).indices();
  for (std::size_t i = 0; i < n; ++i) {
    for (int l : fixed) out(static_cast<Eigen::Index>(i), l) = x[l];
  }
  if (kind_ != Kind::GaussianCopula || free.empty()) return out;

  // Gaussian conditioning of the latent scores z_free | z_fixed.
  const auto nf = static_cast<Eigen::Index>(fixed.size());
  const auto nr = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd s_ff(nf, nf);
  Eigen::MatrixXd s_rf(nr, nf);
  Eigen::MatrixXd s_rr(nr, nr);
  for (Eigen::Index i = 0; i < nf; ++i) {
    for (Eigen::Index j = 0; j < nf; ++j) s_ff(i, j) = corr_(fixed[i], fixed[j]);
  }
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nf; ++j) s_rf(i, j) = corr_(free[i], fixed[j]);
    for (Eigen::Index j = 0; j < nr; ++j) s_rr(i, j) = corr_(free[i], free[j]);
  }
  Eigen::VectorXd z_fixed(nf);
  for (Eigen::Index j = 0; j < nf; ++j) {
    z_fixed(j) = standard_normal_quantile(clamp_unit(marginals_[fixed[j]].cdf(x[fixed[j]])));
  }
  const Eigen::LDLT<Eigen::MatrixXd> solver(s_ff);
  const Eigen::VectorXd mean = s_rf * solver.solve(z_fixed);
  const Eigen::MatrixXd cov = s_rr - s_rf * solver.solve(s_rf.transpose());
  const Eigen::MatrixXd root = psd_sqrt(0.5 * (cov + cov.transpose()));
  Eigen::VectorXd g(nr);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < nr; ++j) g(j) = rng.normal();
    const Eigen::VectorXd z = mean + root * g;
    for (Eigen::Index j = 0; j < nr; ++j) {
      out(static_cast<Eigen::Index>(i), free[j]) =
          marginals_[free[j]].quantile(clamp_unit(standard_normal_cdf(z(j))));
    }
  }
  return out;
}

}  // namespace kgsa
