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

#include "kgsa/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kgsa/error.hpp"
#include "kgsa/parallel.hpp"
#include "kgsa/rng.hpp"

namespace kgsa {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string format_number(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

double gaussian_value(double sq_dist, double sigma) {
  return std::exp(-sq_dist / (2.0 * sigma * sigma));
}

void require_bandwidth(double value, std::string_view what) {
  require(value > 0.0 && std::isfinite(value), ErrorCode::Domain,
          std::string(what) + " is unset or not positive; resolve it from data first");
}

// Mean of the inner kernel over all pairs of two bags.
double bag_cross_mean(std::span<const double> a, std::span<const double> b,
                      const KernelSpec& inner) {
  double total = 0.0;
  if (const auto* g = inner.get_if<GaussianKernel>()) {
    require_bandwidth(g->sigma, "inner gaussian sigma");
    const double c = 1.0 / (2.0 * g->sigma * g->sigma);
    const Eigen::Map<const Eigen::ArrayXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::ArrayXd diff(bv.size());
    for (double x : a) {
      diff = bv - x;
      total += (-c * diff.square()).exp().sum();
    }
  } else {
    for (double x : a) {
      double row = 0.0;
      for (double y : b) row += eval_kernel(inner, x, y);
      total += row;
    }
  }
  return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Canonical order on bags so that kernel evaluations are exactly symmetric.
bool bag_less(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double bag_mmd2(std::span<const double> a, std::span<const double> b, const KernelSpec& inner,
                double self_a, double self_b) {
  if (bag_less(b, a)) {
    std::swap(a, b);
    std::swap(self_a, self_b);
  }
  return self_a + self_b - 2.0 * bag_cross_mean(a, b, inner);
}

double bag_mmd2(std::span<const double> a, std::span<const double> b, const KernelSpec& inner) {
  return bag_mmd2(a, b, inner, bag_cross_mean(a, a, inner), bag_cross_mean(b, b, inner));
}

double euclidean_sq(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::Domain,
          "curves of different lengths have no Euclidean distance");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total;
}

[[noreturn]] void kind_mismatch(const KernelSpec& spec, OutputKind kind) {
  raise(ErrorCode::VariantMismatch, "kernel '" + std::string(spec.kind_name()) +
                                        "' cannot evaluate " + std::string(to_string(kind)) +
                                        " values");
}

double dirac_value(const DiracKernel& k, int a, int b) {
  require(a >= 0 && a < k.num_levels && b >= 0 && b < k.num_levels, ErrorCode::Domain,
          "categorical level outside [0, " + std::to_string(k.num_levels) + ")");
  return a == b ? 1.0 : 0.0;
}

// Unnormalized log global-alignment score. Rows of the dynamic program are
// rescaled by their maximum and the scale accumulated in log space.
double log_alignment(std::span<const double> a, std::span<const double> b, double bandwidth,
                     std::optional<int> band) {
  const auto n = static_cast<int>(a.size());
  const auto m = static_cast<int>(b.size());
  const double c = 1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> prev(m + 1, 0.0);
  std::vector<double> cur(m + 1, 0.0);
  prev[0] = 1.0;
  double log_scale = 0.0;
  for (int i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), 0.0);
    int lo = 1;
    int hi = m;
    if (band) {
      lo = std::max(1, i - *band);
      hi = std::min(m, i + *band);
    }
    double row_max = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double diff = a[i - 1] - b[j - 1];
      const double g = std::exp(-c * diff * diff);
      const double local = g / (2.0 - g);
      const double v = local * (prev[j - 1] + prev[j] + cur[j - 1]);
      cur[j] = v;
      row_max = std::max(row_max, v);
    }
    if (row_max <= 0.0) return -std::numeric_limits<double>::infinity();
    for (int j = lo; j <= hi; ++j) cur[j] /= row_max;
    log_scale += std::log(row_max);
    std::swap(prev, cur);
    prev[0] = 0.0;
  }
  if (prev[m] <= 0.0) return -std::numeric_limits<double>::infinity();
  return log_scale + std::log(prev[m]);
}

void check_band(std::size_t n, std::size_t m, std::optional<int> band) {
  if (!band) return;
  require(*band >= 0, ErrorCode::Domain, "alignment band must be non-negative");
  const auto gap = n > m ? n - m : m - n;
  require(static_cast<std::size_t>(*band) >= gap, ErrorCode::Infeasible,
          "alignment band " + std::to_string(*band) + " is narrower than the length gap " +
              std::to_string(gap));
}

bool curve_less(const Curve& a, const Curve& b) { return bag_less(a.values, b.values); }

double alignment_from_logs(double l_ab, double l_aa, double l_bb) {
  return std::exp(l_ab - 0.5 * l_aa - 0.5 * l_bb);
}

double wasserstein_value(const WassersteinEmbeddingKernel& k, std::span<const double> a,
                         std::span<const double> b) {
  require_bandwidth(k.lambda, "wasserstein lambda");
  return k.sigma2 * std::exp(-k.lambda * wasserstein2_squared(a, b));
}

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Mean embedding of a scalar base kernel at x under the Durrande marginal.
double durrande_embedding(const KernelSpec& base, const MarginalDist& marginal, double x) {
  const auto& rule = marginal.expectation_rule();
  double total = 0.0;
  for (std::size_t t = 0; t < rule.nodes.size(); ++t) {
    total += rule.weights[t] * eval_kernel(base, x, rule.nodes[t]);
  }
  return total;
}

double sobolev_input(const SobolevKernel& k, double x) {
  return k.marginal ? k.marginal->cdf(x) : x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalar building blocks

double bernoulli_polynomial(int degree, double x) {
  switch (degree) {
    case 0:
      return 1.0;
    case 1:
      return x - 0.5;
    case 2:
      return (x - 1.0) * x + 1.0 / 6.0;
    case 3:
      return ((x - 1.5) * x + 0.5) * x;
    case 4:
      return (((x - 2.0) * x + 1.0) * x) * x - 1.0 / 30.0;
    case 5:
      return ((((x - 2.5) * x + 5.0 / 3.0) * x) * x - 1.0 / 6.0) * x;
    case 6:
      return ((((x - 3.0) * x + 2.5) * x * x - 0.5) * x) * x + 1.0 / 42.0;
    default:
      raise(ErrorCode::Unsupported,
            "Bernoulli polynomial of degree " + std::to_string(degree) + " not implemented");
  }
}

double sobolev_kernel(int r, double x, double x2) {
  require(r >= 1, ErrorCode::Domain, "Sobolev order must be at least 1");
  require(r <= 3, ErrorCode::Unsupported,
          "Sobolev order " + std::to_string(r) + " not supported (max 3)");
  require(x >= 0.0 && x <= 1.0 && x2 >= 0.0 && x2 <= 1.0, ErrorCode::Domain,
          "Sobolev kernel arguments must lie in [0,1]");
  static constexpr double kFactorial[] = {1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0};
  const double sign = (r % 2 == 1) ? 1.0 : -1.0;  // (-1)^{r+1}
  double value = bernoulli_polynomial(2 * r, std::fabs(x - x2)) / (sign * kFactorial[2 * r]);
  for (int j = 1; j <= r; ++j) {
    value += bernoulli_polynomial(j, x) * bernoulli_polynomial(j, x2) /
             (kFactorial[j] * kFactorial[j]);
  }
  return value;
}

ScoreFunction normal_score(double mu, double sd) {
  require(sd > 0.0, ErrorCode::Domain, "normal score needs sd > 0");
  const double inv_var = 1.0 / (sd * sd);
  return ScoreFunction{"normal:" + format_number(mu) + "," + format_number(sd),
                       [mu, inv_var](double x) { return -(x - mu) * inv_var; }};
}

double durrande_zero_mean(const KernelSpec& base, const MarginalDist& marginal, double x,
                          double x2) {
  return eval_kernel(KernelSpec::durrande(base, marginal), x, x2);
}

double stein_zero_mean(const KernelSpec& base, const ScoreFunction& score, double x, double x2) {
  if (x2 < x) std::swap(x, x2);
  const double sx = score.fn(x);
  const double sy = score.fn(x2);
  require(std::isfinite(sx) && std::isfinite(sy), ErrorCode::Domain,
          "score function is not finite at the evaluation points");
  double k = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxy = 0.0;
  if (base.get_if<LinearKernel>() != nullptr) {
    k = x * x2;
    dx = x2;
    dy = x;
    dxy = 1.0;
  } else if (const auto* g = base.get_if<GaussianKernel>()) {
    require_bandwidth(g->sigma, "gaussian sigma");
    const double s2 = g->sigma * g->sigma;
    const double diff = x - x2;
    k = gaussian_value(diff * diff, g->sigma);
    dx = -diff / s2 * k;
    dy = diff / s2 * k;
    dxy = (1.0 / s2 - diff * diff / (s2 * s2)) * k;
  } else {
    raise(ErrorCode::Unsupported, "Stein kernel needs a linear or gaussian base, got '" +
                                      std::string(base.kind_name()) + "'");
  }
  return dxy + sx * dy + sy * dx + sx * sy * k;
}

double wasserstein2_squared(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::Domain, "Wasserstein distance of empty sample");
  if (bag_less(b, a)) std::swap(a, b);
  const std::vector<double> sa = sorted_copy(a);
  const std::vector<double> sb = sorted_copy(b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  // Integrate (F^{-1}(u) - G^{-1}(u))^2 over the merged step breakpoints.
  std::size_t i = 0;
  std::size_t j = 0;
  double u = 0.0;
  double total = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    const double diff = sa[i] - sb[j];
    total += (next - u) * diff * diff;
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

double global_alignment_kernel(const Curve& a, const Curve& b, double inner_bandwidth,
                               std::optional<int> band) {
  require(!a.values.empty() && !b.values.empty(), ErrorCode::Domain,
          "alignment kernel needs non-empty curves");
  require_bandwidth(inner_bandwidth, "alignment bandwidth");
  check_band(a.values.size(), b.values.size(), band);
  const Curve& first = curve_less(b, a) ? b : a;
  const Curve& second = curve_less(b, a) ? a : b;
  const double l_ab = log_alignment(first.values, second.values, inner_bandwidth, band);
  const double l_aa = log_alignment(first.values, first.values, inner_bandwidth, band);
  const double l_bb = log_alignment(second.values, second.values, inner_bandwidth, band);
  return alignment_from_logs(l_ab, l_aa, l_bb);
}

// ---------------------------------------------------------------------------
// KernelSpec

KernelSpec KernelSpec::linear() { return KernelSpec(LinearKernel{}); }

KernelSpec KernelSpec::gaussian(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::Domain, "gaussian sigma must be > 0");
  return KernelSpec(GaussianKernel{sigma});
}

KernelSpec KernelSpec::gaussian_median() { return KernelSpec(GaussianKernel{0.0}); }

KernelSpec KernelSpec::dirac(int num_levels) {
  require(num_levels >= 1, ErrorCode::Domain, "dirac kernel needs at least one level");
  return KernelSpec(DiracKernel{num_levels});
}

KernelSpec KernelSpec::sobolev(int r, std::optional<MarginalDist> marginal) {
  require(r >= 1, ErrorCode::Domain, "Sobolev order must be at least 1");
  require(r <= 3, ErrorCode::Unsupported,
          "Sobolev order " + std::to_string(r) + " not supported (max 3)");
  return KernelSpec(SobolevKernel{r, std::move(marginal)});
}

KernelSpec KernelSpec::durrande(const KernelSpec& base, const MarginalDist& marginal) {
  const bool scalar_base = base.get_if<LinearKernel>() || base.get_if<GaussianKernel>() ||
                           base.get_if<SobolevKernel>();
  require(scalar_base, ErrorCode::Unsupported,
          "Durrande construction needs a 1-D scalar base kernel, got '" +
              std::string(base.kind_name()) + "'");
  auto shared = std::make_shared<const KernelSpec>(base);
  const auto& rule = marginal.expectation_rule();
  std::vector<double> embedding(rule.nodes.size());
  double diag = 0.0;
  for (std::size_t s = 0; s < rule.nodes.size(); ++s) {
    embedding[s] = durrande_embedding(base, marginal, rule.nodes[s]);
    diag += rule.weights[s] * eval_kernel(base, rule.nodes[s], rule.nodes[s]);
  }
  double double_integral = 0.0;
  for (std::size_t s = 0; s < rule.nodes.size(); ++s) {
    double_integral += rule.weights[s] * embedding[s];
  }
  require(double_integral > 1e-14, ErrorCode::DegenerateKernel,
          "base kernel has vanishing double integral under the marginal");
  double projected = 0.0;
  for (std::size_t s = 0; s < rule.nodes.size(); ++s) {
    projected += rule.weights[s] * embedding[s] * embedding[s];
  }
  // E k0(X, X) = 0 means the base RKHS lies in the span of the mean embedding.
  const double residual = diag - projected / double_integral;
  require(residual > 1e-12 * std::max(1.0, std::fabs(diag)), ErrorCode::DegenerateKernel,
          "zero-mean projection of '" + base.describe() + "' is identically zero");
  return KernelSpec(DurrandeKernel{std::move(shared), marginal, double_integral});
}

KernelSpec KernelSpec::stein(const KernelSpec& base, ScoreFunction score) {
  require(base.get_if<LinearKernel>() || base.get_if<GaussianKernel>(), ErrorCode::Unsupported,
          "Stein kernel needs a linear or gaussian base, got '" + std::string(base.kind_name()) +
              "'");
  require(static_cast<bool>(score.fn), ErrorCode::Domain, "Stein kernel needs a score function");
  return KernelSpec(SteinKernel{std::make_shared<const KernelSpec>(base), std::move(score)});
}

KernelSpec KernelSpec::distribution_embedding(double sigma2, double lambda,
                                              const KernelSpec& inner) {
  require(sigma2 > 0.0, ErrorCode::Domain, "distribution kernel sigma2 must be > 0");
  require(lambda >= 0.0, ErrorCode::Domain, "distribution kernel lambda must be > 0");
  return KernelSpec(
      DistributionEmbeddingKernel{sigma2, lambda, std::make_shared<const KernelSpec>(inner)});
}

KernelSpec KernelSpec::wasserstein_embedding(double sigma2, double lambda) {
  require(sigma2 > 0.0, ErrorCode::Domain, "wasserstein kernel sigma2 must be > 0");
  require(lambda >= 0.0, ErrorCode::Domain, "wasserstein kernel lambda must be > 0");
  return KernelSpec(WassersteinEmbeddingKernel{sigma2, lambda});
}

KernelSpec KernelSpec::global_alignment(double inner_bandwidth, std::optional<int> band) {
  require(inner_bandwidth >= 0.0, ErrorCode::Domain, "alignment bandwidth must be > 0");
  if (band) require(*band >= 0, ErrorCode::Domain, "alignment band must be non-negative");
  return KernelSpec(GlobalAlignmentKernel{inner_bandwidth, band});
}

KernelSpec KernelSpec::product_zero_mean(std::vector<KernelSpec> factors) {
  require(!factors.empty(), ErrorCode::Domain, "product kernel needs at least one factor");
  for (const auto& f : factors) {
    // Zero-mean-ness is a property of (kernel, marginal) and is checked
    // numerically before use; here only 1-D scalar kinds are admitted.
    const bool scalar_kind = f.get_if<SobolevKernel>() || f.get_if<DurrandeKernel>() ||
                             f.get_if<SteinKernel>() || f.get_if<GaussianKernel>() ||
                             f.get_if<LinearKernel>();
    require(scalar_kind, ErrorCode::Unsupported,
            "product kernel factors must be 1-D scalar kernels, got '" +
                std::string(f.kind_name()) + "'");
  }
  return KernelSpec(ProductZeroMeanKernel{std::move(factors)});
}

std::string_view KernelSpec::kind_name() const {
  return std::visit(Overloaded{
                        [](const LinearKernel&) { return std::string_view("linear"); },
                        [](const GaussianKernel&) { return std::string_view("gaussian"); },
                        [](const DiracKernel&) { return std::string_view("dirac"); },
                        [](const SobolevKernel&) { return std::string_view("sobolev"); },
                        [](const DurrandeKernel&) { return std::string_view("durrande"); },
                        [](const SteinKernel&) { return std::string_view("stein"); },
                        [](const DistributionEmbeddingKernel&) {
                          return std::string_view("distribution");
                        },
                        [](const WassersteinEmbeddingKernel&) {
                          return std::string_view("wasserstein");
                        },
                        [](const GlobalAlignmentKernel&) { return std::string_view("alignment"); },
                        [](const ProductZeroMeanKernel&) { return std::string_view("product"); },
                    },
                    kind_);
}

std::string KernelSpec::describe() const {
  auto param = [](double v) { return v > 0.0 ? format_number(v) : std::string("median"); };
  return std::visit(
      Overloaded{
          [](const LinearKernel&) { return std::string("linear"); },
          [&](const GaussianKernel& k) { return "gaussian:sigma=" + param(k.sigma); },
          [](const DiracKernel& k) { return "dirac:levels=" + std::to_string(k.num_levels); },
          [](const SobolevKernel& k) {
            std::string s = "sobolev:r=" + std::to_string(k.r);
            if (k.marginal) s += ",marginal=(" + k.marginal->describe() + ")";
            return s;
          },
          [](const DurrandeKernel& k) {
            return "durrande:base=(" + k.base->describe() + "),marginal=(" +
                   k.marginal.describe() + ")";
          },
          [](const SteinKernel& k) {
            return "stein:base=(" + k.base->describe() + "),score=(" + k.score.name + ")";
          },
          [&](const DistributionEmbeddingKernel& k) {
            return "distribution:sigma2=" + format_number(k.sigma2) + ",lambda=" +
                   param(k.lambda) + ",inner=(" + k.inner->describe() + ")";
          },
          [&](const WassersteinEmbeddingKernel& k) {
            return "wasserstein:sigma2=" + format_number(k.sigma2) + ",lambda=" + param(k.lambda);
          },
          [&](const GlobalAlignmentKernel& k) {
            std::string s = "alignment:bandwidth=" + param(k.inner_bandwidth);
            if (k.band) s += ",band=" + std::to_string(*k.band);
            return s;
          },
          [](const ProductZeroMeanKernel& k) {
            std::string s = "product:";
            for (std::size_t i = 0; i < k.factors.size(); ++i) {
              if (i > 0) s += ",";
              s += "(" + k.factors[i].describe() + ")";
            }
            return s;
          },
      },
      kind_);
}

bool KernelSpec::needs_resolution() const {
  return std::visit(Overloaded{
                        [](const GaussianKernel& k) { return k.sigma <= 0.0; },
                        [](const DistributionEmbeddingKernel& k) {
                          return k.lambda <= 0.0 || k.inner->needs_resolution();
                        },
                        [](const WassersteinEmbeddingKernel& k) { return k.lambda <= 0.0; },
                        [](const GlobalAlignmentKernel& k) { return k.inner_bandwidth <= 0.0; },
                        [](const auto&) { return false; },
                    },
                    kind_);
}

// ---------------------------------------------------------------------------
// Evaluation

double eval_kernel(const KernelSpec& spec, double a, double b) {
  return std::visit(
      Overloaded{
          [&](const LinearKernel&) { return a * b; },
          [&](const GaussianKernel& k) {
            require_bandwidth(k.sigma, "gaussian sigma");
            return gaussian_value((a - b) * (a - b), k.sigma);
          },
          [&](const SobolevKernel& k) {
            return sobolev_kernel(k.r, sobolev_input(k, a), sobolev_input(k, b));
          },
          [&](const DurrandeKernel& k) {
            const double ma = durrande_embedding(*k.base, k.marginal, a);
            const double mb = durrande_embedding(*k.base, k.marginal, b);
            return eval_kernel(*k.base, a, b) - ma * mb / k.double_integral;
          },
          [&](const SteinKernel& k) { return stein_zero_mean(*k.base, k.score, a, b); },
          [&](const auto&) -> double { kind_mismatch(spec, OutputKind::Scalar); },
      },
      spec.variant());
}

double eval_kernel(const KernelSpec& spec, const OutputValue& a, const OutputValue& b) {
  if (a.index() != b.index()) {
    raise(ErrorCode::VariantMismatch, "kernel '" + std::string(spec.kind_name()) +
                                          "' got mixed " + std::string(to_string(kind_of(a))) +
                                          " and " + std::string(to_string(kind_of(b))) +
                                          " values");
  }
  switch (kind_of(a)) {
    case OutputKind::Scalar:
      return eval_kernel(spec, std::get<double>(a), std::get<double>(b));
    case OutputKind::Categorical: {
      const auto* k = spec.get_if<DiracKernel>();
      if (k == nullptr) kind_mismatch(spec, OutputKind::Categorical);
      return dirac_value(*k, std::get<Categorical>(a).level, std::get<Categorical>(b).level);
    }
    case OutputKind::Curve: {
      const auto& ca = std::get<Curve>(a);
      const auto& cb = std::get<Curve>(b);
      if (const auto* g = spec.get_if<GaussianKernel>()) {
        require_bandwidth(g->sigma, "gaussian sigma");
        return gaussian_value(euclidean_sq(ca.values, cb.values), g->sigma);
      }
      if (spec.get_if<LinearKernel>() != nullptr) {
        require(ca.values.size() == cb.values.size(), ErrorCode::Domain,
                "linear kernel on curves needs equal lengths");
        return std::inner_product(ca.values.begin(), ca.values.end(), cb.values.begin(), 0.0);
      }
      if (const auto* ga = spec.get_if<GlobalAlignmentKernel>()) {
        return global_alignment_kernel(ca, cb, ga->inner_bandwidth, ga->band);
      }
      kind_mismatch(spec, OutputKind::Curve);
    }
    case OutputKind::DistSample: {
      const auto& da = std::get<DistSample>(a).values;
      const auto& db = std::get<DistSample>(b).values;
      if (const auto* k = spec.get_if<DistributionEmbeddingKernel>()) {
        require_bandwidth(k->lambda, "distribution kernel lambda");
        return k->sigma2 * std::exp(-k->lambda * bag_mmd2(da, db, *k->inner));
      }
      if (const auto* k = spec.get_if<WassersteinEmbeddingKernel>()) {
        return wasserstein_value(*k, da, db);
      }
      kind_mismatch(spec, OutputKind::DistSample);
    }
  }
  raise(ErrorCode::VariantMismatch, "unknown output kind");
}

double eval_product_kernel(const KernelSpec& spec, std::span<const double> a,
                           std::span<const double> b, std::span<const int> active) {
  const auto* p = spec.get_if<ProductZeroMeanKernel>();
  require(p != nullptr, ErrorCode::VariantMismatch, "expected a product kernel");
  double value = 1.0;
  for (int l : active) {
    require(l >= 0 && static_cast<std::size_t>(l) < p->factors.size() &&
                static_cast<std::size_t>(l) < a.size() && static_cast<std::size_t>(l) < b.size(),
            ErrorCode::Domain, "product kernel factor index out of range");
    value *= 1.0 + eval_kernel(p->factors[l], a[l], b[l]);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Gram matrices

namespace {

template <typename Entry>
GramMatrix fill_symmetric(std::size_t n, Entry&& entry) {
  GramMatrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = entry(i, j);
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  });
  return g;
}

template <typename Entry>
GramMatrix fill_with_context(std::size_t n, Entry&& entry) {
  return fill_symmetric(n, [&](std::size_t i, std::size_t j) {
    try {
      return entry(i, j);
    } catch (const Error& e) {
      throw Error(e.code(), e.message() + " (at entry " + std::to_string(i) + "," +
                                std::to_string(j) + ")");
    }
  });
}

}  // namespace

GramMatrix gram(const KernelSpec& spec, std::span<const double> column) {
  require(!column.empty(), ErrorCode::Domain, "Gram matrix of an empty column");
  const std::size_t n = column.size();
  if (const auto* d = spec.get_if<DurrandeKernel>()) {
    std::vector<double> emb(n);
    parallel_for(n, [&](std::size_t i) {
      emb[i] = durrande_embedding(*d->base, d->marginal, column[i]);
    });
    return fill_with_context(n, [&](std::size_t i, std::size_t j) {
      return eval_kernel(*d->base, column[i], column[j]) - emb[i] * emb[j] / d->double_integral;
    });
  }
  if (const auto* g = spec.get_if<GaussianKernel>()) {
    require_bandwidth(g->sigma, "gaussian sigma");
    for (double v : column) require(std::isfinite(v), ErrorCode::Domain, "non-finite kernel argument");
    const Eigen::Map<const Eigen::ArrayXd> x(column.data(), static_cast<Eigen::Index>(n));
    const double c = 1.0 / (2.0 * g->sigma * g->sigma);
    GramMatrix out(x.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      out.col(j) = (-c * (x - x[j]).square()).exp().matrix();
    }
    return out;
  }
  if (const auto* s = spec.get_if<SobolevKernel>()) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = sobolev_input(*s, column[i]);
    return fill_with_context(
        n, [&](std::size_t i, std::size_t j) { return sobolev_kernel(s->r, u[i], u[j]); });
  }
  return fill_with_context(
      n, [&](std::size_t i, std::size_t j) { return eval_kernel(spec, column[i], column[j]); });
}

GramMatrix cross_gram(const KernelSpec& spec, std::span<const OutputValue> p,
                      std::span<const OutputValue> q) {
  require(!p.empty() && !q.empty(), ErrorCode::Domain, "cross Gram of an empty column");
  const auto rows = static_cast<Eigen::Index>(p.size());
  const auto cols = static_cast<Eigen::Index>(q.size());
  const auto* g = spec.get_if<GaussianKernel>();
  if (g != nullptr && kind_of(p.front()) == OutputKind::Scalar) {
    require_bandwidth(g->sigma, "gaussian sigma");
    const std::vector<double> a = to_scalars({p.begin(), p.end()});
    const std::vector<double> b = to_scalars({q.begin(), q.end()});
    for (double v : a) require(std::isfinite(v), ErrorCode::Domain, "non-finite kernel argument");
    for (double v : b) require(std::isfinite(v), ErrorCode::Domain, "non-finite kernel argument");
    const Eigen::Map<const Eigen::ArrayXd> x(a.data(), rows);
    const double c = 1.0 / (2.0 * g->sigma * g->sigma);
    GramMatrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) out.col(j) = (-c * (x - b[j]).square()).exp().matrix();
    return out;
  }
  GramMatrix out(rows, cols);
  parallel_for(p.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval_kernel(spec, p[i], q[j]);
    }
  });
  return out;
}

GramMatrix gram(const KernelSpec& spec, std::span<const OutputValue> column) {
  require(!column.empty(), ErrorCode::Domain, "Gram matrix of an empty column");
  const std::size_t n = column.size();
  for (const auto& v : column) {
    require(v.index() == column.front().index(), ErrorCode::VariantMismatch,
            "Gram column mixes output kinds");
  }
  if (kind_of(column.front()) == OutputKind::Scalar) {
    return gram(spec, std::span<const double>(to_scalars({column.begin(), column.end()})));
  }
  if (const auto* k = spec.get_if<DistributionEmbeddingKernel>();
      k != nullptr && kind_of(column.front()) == OutputKind::DistSample) {
    require_bandwidth(k->lambda, "distribution kernel lambda");
    std::vector<double> self(n);
    parallel_for(n, [&](std::size_t i) {
      const auto& v = std::get<DistSample>(column[i]).values;
      self[i] = bag_cross_mean(v, v, *k->inner);
    });
    return fill_with_context(n, [&](std::size_t i, std::size_t j) {
      const auto& a = std::get<DistSample>(column[i]).values;
      const auto& b = std::get<DistSample>(column[j]).values;
      return k->sigma2 * std::exp(-k->lambda * bag_mmd2(a, b, *k->inner, self[i], self[j]));
    });
  }
  if (const auto* ga = spec.get_if<GlobalAlignmentKernel>();
      ga != nullptr && kind_of(column.front()) == OutputKind::Curve) {
    require_bandwidth(ga->inner_bandwidth, "alignment bandwidth");
    std::vector<double> self(n);
    parallel_for(n, [&](std::size_t i) {
      const auto& v = std::get<Curve>(column[i]).values;
      require(!v.empty(), ErrorCode::Domain, "alignment kernel needs non-empty curves");
      self[i] = log_alignment(v, v, ga->inner_bandwidth, ga->band);
    });
    return fill_with_context(n, [&](std::size_t i, std::size_t j) {
      const auto& a = std::get<Curve>(column[i]);
      const auto& b = std::get<Curve>(column[j]);
      check_band(a.values.size(), b.values.size(), ga->band);
      const bool swap = curve_less(b, a);
      const auto& first = swap ? b : a;
      const auto& second = swap ? a : b;
      const double l_ab = log_alignment(first.values, second.values, ga->inner_bandwidth, ga->band);
      return alignment_from_logs(l_ab, swap ? self[j] : self[i], swap ? self[i] : self[j]);
    });
  }
  return fill_with_context(
      n, [&](std::size_t i, std::size_t j) { return eval_kernel(spec, column[i], column[j]); });
}

// ---------------------------------------------------------------------------
// Bandwidths and MMD

namespace {

double lower_median(std::vector<double>& values) {
  require(!values.empty(), ErrorCode::DegenerateSample, "no pairwise distances");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double checked_median(std::vector<double>& distances) {
  const bool all_zero =
      std::all_of(distances.begin(), distances.end(), [](double v) { return v == 0.0; });
  require(!all_zero, ErrorCode::DegenerateSample, "all pairwise distances are zero");
  const double med = lower_median(distances);
  require(med > 0.0, ErrorCode::DegenerateSample,
          "median pairwise distance is zero (more than half the pairs coincide)");
  return med;
}

// Pooled bag values, thinned by a fixed stride to at most `cap` entries.
std::vector<double> pooled_values(std::span<const OutputValue> column, std::size_t cap) {
  std::vector<double> pooled;
  for (const auto& v : column) {
    const auto* d = std::get_if<DistSample>(&v);
    require(d != nullptr, ErrorCode::VariantMismatch, "expected distribution samples");
    pooled.insert(pooled.end(), d->values.begin(), d->values.end());
  }
  if (pooled.size() <= cap) return pooled;
  const std::size_t stride = (pooled.size() + cap - 1) / cap;
  std::vector<double> thinned;
  for (std::size_t i = 0; i < pooled.size(); i += stride) thinned.push_back(pooled[i]);
  return thinned;
}

constexpr std::size_t kPooledCap = 4000;

}  // namespace

double median_heuristic(std::span<const OutputValue> column, Metric metric,
                        const KernelSpec* inner) {
  const std::size_t n = column.size();
  require(n >= 2, ErrorCode::DegenerateSample, "median heuristic needs at least two values");
  std::vector<double> distances;
  distances.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    require(column[i].index() == column[0].index(), ErrorCode::VariantMismatch,
            "median heuristic column mixes output kinds");
  }
  switch (metric) {
    case Metric::Euclidean: {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (const auto* a = std::get_if<double>(&column[i])) {
            distances.push_back(std::fabs(*a - std::get<double>(column[j])));
          } else if (const auto* c = std::get_if<Curve>(&column[i])) {
            distances.push_back(std::sqrt(euclidean_sq(c->values, std::get<Curve>(column[j]).values)));
          } else {
            raise(ErrorCode::VariantMismatch,
                  "Euclidean median heuristic needs scalar or curve values");
          }
        }
      }
      break;
    }
    case Metric::Mmd: {
      require(inner != nullptr, ErrorCode::Domain, "MMD median heuristic needs an inner kernel");
      std::vector<double> self(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto* d = std::get_if<DistSample>(&column[i]);
        require(d != nullptr, ErrorCode::VariantMismatch, "MMD metric needs distribution values");
        self[i] = bag_cross_mean(d->values, d->values, *inner);
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          distances.push_back(bag_mmd2(std::get<DistSample>(column[i]).values,
                                       std::get<DistSample>(column[j]).values, *inner, self[i],
                                       self[j]));
        }
      }
      break;
    }
    case Metric::Wasserstein2: {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const auto* a = std::get_if<DistSample>(&column[i]);
          require(a != nullptr, ErrorCode::VariantMismatch,
                  "Wasserstein metric needs distribution values");
          distances.push_back(
              wasserstein2_squared(a->values, std::get<DistSample>(column[j]).values));
        }
      }
      break;
    }
  }
  return checked_median(distances);
}

KernelSpec resolve_bandwidths(const KernelSpec& spec, std::span<const OutputValue> column) {
  if (!spec.needs_resolution()) return spec;
  if (spec.get_if<GaussianKernel>() != nullptr) {
    if (!column.empty() && kind_of(column.front()) == OutputKind::DistSample) {
      const auto pooled = pooled_values(column, kPooledCap);
      return KernelSpec::gaussian(
          median_heuristic(to_outputs(pooled), Metric::Euclidean));
    }
    return KernelSpec::gaussian(median_heuristic(column, Metric::Euclidean));
  }
  if (const auto* k = spec.get_if<DistributionEmbeddingKernel>()) {
    const KernelSpec inner = resolve_bandwidths(*k->inner, column);
    const double lambda = k->lambda > 0.0 ? k->lambda : median_heuristic(column, Metric::Mmd, &inner);
    return KernelSpec::distribution_embedding(k->sigma2, lambda, inner);
  }
  if (const auto* k = spec.get_if<WassersteinEmbeddingKernel>()) {
    return KernelSpec::wasserstein_embedding(k->sigma2,
                                             median_heuristic(column, Metric::Wasserstein2));
  }
  if (const auto* k = spec.get_if<GlobalAlignmentKernel>()) {
    // Median pointwise gap between curves, scaled by sqrt(length).
    std::vector<double> gaps;
    std::vector<double> lengths;
    for (std::size_t i = 0; i < column.size(); ++i) {
      const auto* a = std::get_if<Curve>(&column[i]);
      require(a != nullptr, ErrorCode::VariantMismatch, "alignment kernel needs curves");
      lengths.push_back(static_cast<double>(a->values.size()));
      for (std::size_t j = i + 1; j < column.size(); ++j) {
        const auto& b = std::get<Curve>(column[j]);
        const std::size_t len = std::min(a->values.size(), b.values.size());
        for (std::size_t t = 0; t < len; ++t) gaps.push_back(std::fabs(a->values[t] - b.values[t]));
      }
    }
    const double gap = checked_median(gaps);
    const double length = lower_median(lengths);
    return KernelSpec::global_alignment(gap * std::sqrt(length), k->band);
  }
  return spec;
}

double mmd2(std::span<const OutputValue> p, std::span<const OutputValue> q,
            const KernelSpec& spec, bool unbiased) {
  require(!p.empty() && !q.empty(), ErrorCode::Domain, "MMD needs non-empty samples");
  if (unbiased) require(p.size() >= 2 && q.size() >= 2, ErrorCode::Domain,
                        "unbiased MMD needs at least two points per sample");
  auto within = [&](std::span<const OutputValue> s) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) total += 2.0 * eval_kernel(spec, s[i], s[j]);
    }
    const double n = static_cast<double>(s.size());
    if (unbiased) return total / (n * (n - 1.0));
    for (const auto& v : s) total += eval_kernel(spec, v, v);
    return total / (n * n);
  };
  double cross = 0.0;
  for (const auto& a : p) {
    for (const auto& b : q) cross += eval_kernel(spec, a, b);
  }
  cross /= static_cast<double>(p.size()) * static_cast<double>(q.size());
  return within(p) - 2.0 * cross + within(q);
}

ZeroMeanCheck verify_zero_mean(const KernelSpec& spec, const MarginalDist& marginal,
                               std::span<const double> probe_points, int mc_n,
                               std::uint64_t seed) {
  require(mc_n >= 2, ErrorCode::Domain, "zero-mean check needs at least two draws");
  ZeroMeanCheck check;
  const Rng root(seed);
  for (std::size_t p = 0; p < probe_points.size(); ++p) {
    Rng rng = root.substream({stream_tag::kZeroMean, p});
    double sum = 0.0;
    double sum_sq = 0.0;
    try {
      for (int t = 0; t < mc_n; ++t) {
        const double v = eval_kernel(spec, probe_points[p], marginal.sample(rng));
        sum += v;
        sum_sq += v * v;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Domain) throw;
      raise(ErrorCode::AssumptionViolated, "kernel '" + spec.describe() +
                                               "' is not defined on the support of " +
                                               marginal.describe() + ": " + e.message());
    }
    const double n = static_cast<double>(mc_n);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    const double se = std::sqrt(var / n);
    const double ratio =
        se > 0.0 ? std::fabs(mean) / se
                 : (mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    check.max_abs_mean = std::max(check.max_abs_mean, std::fabs(mean));
    if (ratio >= check.max_ratio) {
      check.max_ratio = ratio;
      check.standard_error = se;
    }
  }
  return check;
}

GramMatrix resolve_and_gram(const KernelSpec& spec, std::span<const OutputValue> column,
                            KernelSpec* resolved) {
  const auto* k = spec.get_if<DistributionEmbeddingKernel>();
  if (k == nullptr || k->lambda > 0.0 || column.empty() ||
      kind_of(column.front()) != OutputKind::DistSample) {
    KernelSpec r = resolve_bandwidths(spec, column);
    GramMatrix g = gram(r, column);
    if (resolved != nullptr) *resolved = std::move(r);
    return g;
  }
  const std::size_t n = column.size();
  require(n >= 2, ErrorCode::DegenerateSample, "median heuristic needs at least two values");
  for (const auto& v : column) {
    require(kind_of(v) == OutputKind::DistSample, ErrorCode::VariantMismatch,
            "MMD metric needs distribution values");
  }
  const KernelSpec inner = resolve_bandwidths(*k->inner, column);
  std::vector<double> self(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& v = std::get<DistSample>(column[i]).values;
    self[i] = bag_cross_mean(v, v, inner);
  });
  // Pairwise MMD^2 once; the median sets lambda and the same values feed the Gram.
  GramMatrix dist = fill_with_context(n, [&](std::size_t i, std::size_t j) {
    if (i == j) return 0.0;
    return bag_mmd2(std::get<DistSample>(column[i]).values,
                    std::get<DistSample>(column[j]).values, inner, self[i], self[j]);
  });
  std::vector<double> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.push_back(dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  const double lambda = checked_median(pairs);
  KernelSpec r = KernelSpec::distribution_embedding(k->sigma2, lambda, inner);
  GramMatrix g = (k->sigma2 * (-lambda * dist.array()).exp()).matrix();
  if (resolved != nullptr) *resolved = std::move(r);
  return g;
}

}  // namespace kgsa
