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

#include "kgsa/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>

#include "kgsa/error.hpp"

namespace kgsa {

namespace {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
QuadratureRule golub_welsch(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& offdiag,
                            double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diagonal, offdiag, Eigen::ComputeEigenvectors);
  const auto n = diagonal.size();
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int order) {
  require(order >= 1, ErrorCode::Domain, "quadrature order must be positive");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

QuadratureRule gauss_hermite(int order) {
  require(order >= 1, ErrorCode::Domain, "quadrature order must be positive");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) off(k - 1) = std::sqrt(k / 2.0);
  return golub_welsch(diag, off, std::sqrt(std::numbers::pi));
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double standard_normal_quantile(double u) {
  require(u > 0.0 && u < 1.0, ErrorCode::Domain, "normal quantile needs u in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

MarginalDist::MarginalDist(Variant dist) : dist_(std::move(dist)) {
  if (const auto* u = std::get_if<UniformDist>(&dist_)) {
    const QuadratureRule gl = gauss_legendre(kMarginalQuadratureOrder);
    const double half = 0.5 * (u->b - u->a);
    const double mid = 0.5 * (u->a + u->b);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      rule_.nodes.push_back(mid + half * gl.nodes[i]);
      rule_.weights.push_back(0.5 * gl.weights[i]);
    }
  } else if (const auto* g = std::get_if<NormalDist>(&dist_)) {
    const QuadratureRule gh = gauss_hermite(kMarginalQuadratureOrder);
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
      rule_.nodes.push_back(g->mu + std::numbers::sqrt2 * g->sd * gh.nodes[i]);
      rule_.weights.push_back(gh.weights[i] / std::sqrt(std::numbers::pi));
    }
  } else {
    const auto& e = std::get<EmpiricalDist>(dist_);
    rule_.nodes = e.values;
    rule_.weights.assign(e.values.size(), 1.0 / static_cast<double>(e.values.size()));
  }
}

MarginalDist MarginalDist::uniform(double a, double b) {
  require(std::isfinite(a) && std::isfinite(b) && a < b, ErrorCode::Domain,
          "Uniform marginal needs a < b");
  return MarginalDist(UniformDist{a, b});
}

MarginalDist MarginalDist::normal(double mu, double sd) {
  require(std::isfinite(mu) && sd > 0.0, ErrorCode::Domain, "Normal marginal needs sd > 0");
  return MarginalDist(NormalDist{mu, sd});
}

MarginalDist MarginalDist::empirical(std::vector<double> values) {
  require(!values.empty(), ErrorCode::Domain, "Empirical marginal needs at least one value");
  std::sort(values.begin(), values.end());
  return MarginalDist(EmpiricalDist{std::move(values)});
}

std::string MarginalDist::describe() const {
  std::ostringstream out;
  out.precision(17);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          out << "uniform:" << d.a << "," << d.b;
        } else if constexpr (std::is_same_v<T, NormalDist>) {
          out << "normal:" << d.mu << "," << d.sd;
        } else {
          out << "empirical:" << d.values.size();
        }
      },
      dist_);
  return out.str();
}

double MarginalDist::cdf(double x) const {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return std::clamp((x - d.a) / (d.b - d.a), 0.0, 1.0);
        } else if constexpr (std::is_same_v<T, NormalDist>) {
          return standard_normal_cdf((x - d.mu) / d.sd);
        } else {
          // Mid-rank convention: atoms map to (k + 1/2) / n.
          const auto lo = std::lower_bound(d.values.begin(), d.values.end(), x);
          const auto hi = std::upper_bound(lo, d.values.end(), x);
          const double below = static_cast<double>(lo - d.values.begin());
          const double ties = static_cast<double>(hi - lo);
          return (below + 0.5 * ties) / static_cast<double>(d.values.size());
        }
      },
      dist_);
}

double MarginalDist::quantile(double u) const {
  require(u >= 0.0 && u <= 1.0, ErrorCode::Domain, "quantile level outside [0,1]");
  return std::visit(
      [u](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return d.a + (d.b - d.a) * u;
        } else if constexpr (std::is_same_v<T, NormalDist>) {
          return d.mu + d.sd * standard_normal_quantile(u);
        } else {
          const auto n = d.values.size();
          auto k = static_cast<std::size_t>(u * static_cast<double>(n));
          return d.values[std::min(k, n - 1)];
        }
      },
      dist_);
}

double MarginalDist::sample(Rng& rng) const {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return rng.uniform(d.a, d.b);
        } else if constexpr (std::is_same_v<T, NormalDist>) {
          return rng.normal(d.mu, d.sd);
        } else {
          return d.values[rng.index(d.values.size())];
        }
      },
      dist_);
}

double MarginalDist::mean() const {
  double total = 0.0;
  for (std::size_t i = 0; i < rule_.nodes.size(); ++i) total += rule_.weights[i] * rule_.nodes[i];
  return total;
}

double MarginalDist::variance() const {
  const double m = mean();
  double total = 0.0;
  for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
    total += rule_.weights[i] * (rule_.nodes[i] - m) * (rule_.nodes[i] - m);
  }
  return total;
}

}  // namespace kgsa
