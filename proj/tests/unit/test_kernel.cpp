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

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "kgsa/kernel.hpp"
#include "test_util.hpp"

namespace kgsa {
namespace {

using testing::expect_code;
using testing::levels;
using testing::scalars;

double min_eigenvalue(const GramMatrix& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

TEST(EvalKernel, GaussianAtDistanceTwo) {
  EXPECT_NEAR(eval_kernel(KernelSpec::gaussian(1.0), 0.0, 2.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(eval_kernel(KernelSpec::gaussian(1.0), 0.0, 2.0), 0.135335, 1e-6);
}

TEST(EvalKernel, DiracAndLinear) {
  const KernelSpec dirac = KernelSpec::dirac(4);
  EXPECT_EQ(eval_kernel(dirac, OutputValue(Categorical{2}), OutputValue(Categorical{2})), 1.0);
  EXPECT_EQ(eval_kernel(dirac, OutputValue(Categorical{1}), OutputValue(Categorical{3})), 0.0);
  EXPECT_EQ(eval_kernel(KernelSpec::linear(), 1.5, -2.0), -3.0);
}

TEST(EvalKernel, VariantMismatchIsTyped) {
  expect_code([] { (void)eval_kernel(KernelSpec::gaussian(1.0), OutputValue(Categorical{1}), OutputValue(Categorical{1})); },
              ErrorCode::VariantMismatch);
  expect_code([] { (void)eval_kernel(KernelSpec::linear(), OutputValue(1.0), OutputValue(Categorical{1})); },
              ErrorCode::VariantMismatch);
}

TEST(BernoulliPolynomial, LowDegrees) {
  for (double x : {0.0, 0.25, 0.7, 1.0}) {
    EXPECT_NEAR(bernoulli_polynomial(1, x), x - 0.5, 1e-15);
    EXPECT_NEAR(bernoulli_polynomial(2, x), x * x - x + 1.0 / 6.0, 1e-15);
  }
}

TEST(SobolevKernel, HandValuesOrderOne) {
  EXPECT_NEAR(sobolev_kernel(1, 0.5, 0.5), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(sobolev_kernel(1, 0.0, 0.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(sobolev_kernel(1, 0.0, 1.0), -1.0 / 6.0, 1e-15);
}

TEST(SobolevKernel, DomainAndOrderErrors) {
  expect_code([] { (void)sobolev_kernel(1, -0.1, 0.5); }, ErrorCode::Domain);
  expect_code([] { (void)sobolev_kernel(1, 0.5, 1.2); }, ErrorCode::Domain);
  expect_code([] { (void)sobolev_kernel(4, 0.5, 0.5); }, ErrorCode::Unsupported);
}

TEST(DurrandeKernel, LinearBaseIsDegenerate) {
  expect_code(
      [] {
        (void)durrande_zero_mean(KernelSpec::linear(), MarginalDist::uniform(0, 1), 0.3, 0.8);
      },
      ErrorCode::DegenerateKernel);
}

TEST(DurrandeKernel, GaussianBaseHasZeroMeanUnderMarginal) {
  // Composite midpoint rule with 4000 cells, independent of the library quadrature.
  const KernelSpec base = KernelSpec::gaussian(1.0);
  const MarginalDist u = MarginalDist::uniform(0, 1);
  const KernelSpec k0 = KernelSpec::durrande(base, u);
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    const int cells = 4000;
    double acc = 0.0;
    for (int c = 0; c < cells; ++c) acc += eval_kernel(k0, x, (c + 0.5) / cells);
    EXPECT_NEAR(acc / cells, 0.0, 1e-8) << "x = " << x;
  }
  EXPECT_GT(durrande_zero_mean(base, u, 0.5, 0.5), 0.0);
}

TEST(DurrandeKernel, NormalMarginalZeroMean) {
  const KernelSpec base = KernelSpec::gaussian(1.0);
  const MarginalDist n = MarginalDist::normal(0.5, 2.0);
  const KernelSpec k0 = KernelSpec::durrande(base, n);
  // Trapezoid on the normal density over +-10 sd.
  const int cells = 20000;
  const double lo = 0.5 - 20.0;
  const double h = 40.0 / cells;
  for (double x : {-1.0, 0.5, 3.0}) {
    double acc = 0.0;
    for (int c = 0; c <= cells; ++c) {
      const double t = lo + c * h;
      const double w = (c == 0 || c == cells) ? 0.5 : 1.0;
      const double pdf = std::exp(-0.5 * std::pow((t - 0.5) / 2.0, 2)) / (2.0 * std::sqrt(2.0 * std::numbers::pi));
      acc += w * h * pdf * eval_kernel(k0, x, t);
    }
    EXPECT_NEAR(acc, 0.0, 1e-8) << "x = " << x;
    EXPECT_NEAR(durrande_zero_mean(base, n, x, 0.1), eval_kernel(k0, x, 0.1), 1e-15);
  }
}

TEST(SteinKernel, LinearBaseStandardNormal) {
  const KernelSpec base = KernelSpec::linear();
  const ScoreFunction score = normal_score();
  for (double x : {-1.3, 0.0, 0.4, 2.0}) {
    for (double y : {-0.5, 0.0, 1.7}) {
      EXPECT_NEAR(stein_zero_mean(base, score, x, y), (1 - x * x) * (1 - y * y), 1e-12);
    }
  }
  EXPECT_NEAR(stein_zero_mean(base, score, 0.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(stein_zero_mean(base, score, 1.0, 0.37), 0.0, 1e-15);
}

TEST(SteinKernel, SymmetricForGaussianBase) {
  const KernelSpec base = KernelSpec::gaussian(0.7);
  const ScoreFunction score = normal_score(0.2, 1.5);
  for (double x : {-1.0, 0.1, 2.2}) {
    for (double y : {-0.3, 0.9}) {
      EXPECT_EQ(stein_zero_mean(base, score, x, y), stein_zero_mean(base, score, y, x));
    }
  }
}

TEST(SteinKernel, NonDifferentiableBaseUnsupported) {
  expect_code([] { (void)KernelSpec::stein(KernelSpec::dirac(2), normal_score()); },
              ErrorCode::Unsupported);
}

TEST(Gram, SmallExamples) {
  const auto lin = gram(KernelSpec::linear(), std::span<const OutputValue>(scalars({1, 2})));
  EXPECT_EQ(lin(0, 0), 1.0);
  EXPECT_EQ(lin(0, 1), 2.0);
  EXPECT_EQ(lin(1, 0), 2.0);
  EXPECT_EQ(lin(1, 1), 4.0);
  const auto lv = levels({0, 0, 1});
  const auto dir = gram(KernelSpec::dirac(2), std::span<const OutputValue>(lv));
  Eigen::Matrix3d expected;
  expected << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  EXPECT_EQ(dir, expected);
  const auto ys = scalars({-1.0, 0.3, 2.5, 7.0});
  const auto g = gram(KernelSpec::gaussian(0.4), std::span<const OutputValue>(ys));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(g(i, i), 1.0);
}

TEST(Gram, ErrorNamesEntry) {
  const auto col = scalars({0.2, 0.5, 1.5});
  try {
    (void)gram(KernelSpec::sobolev(1), std::span<const OutputValue>(col));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("entry"), std::string::npos) << e.what();
  }
}

TEST(MedianHeuristic, HandEnumerations) {
  EXPECT_EQ(median_heuristic(scalars({0, 1, 3}), Metric::Euclidean), 2.0);
  EXPECT_EQ(median_heuristic(scalars({0, 0, 1}), Metric::Euclidean), 1.0);
  expect_code([] { (void)median_heuristic(scalars({5, 5, 5}), Metric::Euclidean); },
              ErrorCode::DegenerateSample);
}

TEST(Mmd2, HandValues) {
  const auto p = scalars({1, 2});
  const auto q = scalars({3, 5});
  EXPECT_NEAR(mmd2(p, q, KernelSpec::linear()), 6.25, 1e-12);
  EXPECT_EQ(mmd2(p, p, KernelSpec::gaussian(1.0)), 0.0);
  EXPECT_NEAR(mmd2(levels({0, 0}), levels({1, 1, 1}), KernelSpec::dirac(2)), 2.0, 1e-15);
  expect_code([&] { (void)mmd2(p, levels({0}), KernelSpec::linear()); }, ErrorCode::VariantMismatch);
}

TEST(Mmd2, LinearKernelIsSquaredMeanGap) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<OutputValue> p, q;
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < 7 + rep; ++i) {
      const double v = nd(gen);
      p.emplace_back(v);
      sp += v;
    }
    for (int i = 0; i < 5 + 2 * rep; ++i) {
      const double v = nd(gen) + 1.0;
      q.emplace_back(v);
      sq += v;
    }
    const double gap = sp / p.size() - sq / q.size();
    EXPECT_NEAR(mmd2(p, q, KernelSpec::linear()), gap * gap, 1e-12 * std::max(1.0, gap * gap));
  }
}

Curve curve(std::vector<double> values) {
  Curve c;
  for (std::size_t t = 0; t < values.size(); ++t) c.times.push_back(static_cast<double>(t));
  c.values = std::move(values);
  return c;
}

TEST(GlobalAlignment, NormalizedAndSymmetric) {
  const Curve a = curve({0.0, 1.0, 2.0, 1.5});
  const Curve b = curve({0.2, 0.8, 2.4, 1.0, 0.3});
  EXPECT_EQ(global_alignment_kernel(a, a, 1.0), 1.0);
  EXPECT_EQ(global_alignment_kernel(curve({4.2}), curve({4.2}), 0.5), 1.0);
  const double ab = global_alignment_kernel(a, b, 1.0);
  EXPECT_NEAR(ab, global_alignment_kernel(b, a, 1.0), 1e-12);
  EXPECT_GT(ab, 0.0);
  EXPECT_LE(ab, 1.0);
  const double banded = global_alignment_kernel(a, b, 1.0, 2);
  EXPECT_GT(banded, 0.0);
  EXPECT_LE(banded, 1.0);
  expect_code([&] { (void)global_alignment_kernel(a, curve({1, 2, 3, 4, 5, 6, 7}), 1.0, 2); },
              ErrorCode::Infeasible);
}

TEST(Wasserstein, QuantileCoupling) {
  const std::vector<double> a = {0.0, 1.0, 2.0};
  const std::vector<double> b = {3.0, 1.0, 2.0};
  // Sorted couples (0,1), (1,2), (2,3).
  EXPECT_NEAR(wasserstein2_squared(a, b), 1.0, 1e-15);
  EXPECT_EQ(wasserstein2_squared(a, a), 0.0);
}

// ---------------------------------------------------------------------------
// Zero-mean verification.

std::vector<double> quantile_probes(const MarginalDist& m) {
  std::vector<double> out;
  for (int k = 1; k <= 9; ++k) out.push_back(m.quantile(k / 10.0));
  return out;
}

TEST(VerifyZeroMean, SobolevUnderUniform) {
  const MarginalDist u = MarginalDist::uniform(0, 1);
  const ZeroMeanCheck c1 = verify_zero_mean(KernelSpec::sobolev(1), u, quantile_probes(u), 100000, 0);
  EXPECT_LT(c1.max_abs_mean, 5e-3);
  EXPECT_LE(c1.max_ratio, 3.0);
  const ZeroMeanCheck c2 = verify_zero_mean(KernelSpec::sobolev(2), u, quantile_probes(u), 100000, 0);
  EXPECT_LE(c2.max_ratio, 3.0);
}

TEST(VerifyZeroMean, DurrandeAndStein) {
  const MarginalDist u = MarginalDist::uniform(-1, 2);
  const KernelSpec d = KernelSpec::durrande(KernelSpec::gaussian(0.5), u);
  EXPECT_LE(verify_zero_mean(d, u, quantile_probes(u), 100000, 5).max_ratio, 3.0);
  const MarginalDist n = MarginalDist::normal(0, 1);
  const KernelSpec s = KernelSpec::stein(KernelSpec::gaussian(1.0), normal_score());
  EXPECT_LE(verify_zero_mean(s, n, quantile_probes(n), 100000, 6).max_ratio, 3.0);
}

TEST(VerifyZeroMean, GaussianIsNegativeControl) {
  const MarginalDist u = MarginalDist::uniform(0, 1);
  const ZeroMeanCheck c = verify_zero_mean(KernelSpec::gaussian(1.0), u, quantile_probes(u), 100000, 7);
  EXPECT_GT(c.max_abs_mean, 0.1);
  EXPECT_GT(c.max_ratio, 3.0);
}

TEST(VerifyZeroMean, KernelUndefinedOnSupportIsAssumptionViolation) {
  const MarginalDist n = MarginalDist::normal(0, 1);
  expect_code([&] { (void)verify_zero_mean(KernelSpec::sobolev(1), n, quantile_probes(n), 1000, 1); },
              ErrorCode::AssumptionViolated);
}

// ---------------------------------------------------------------------------
// Symmetry and PSD on random samples.

struct NamedGram {
  std::string name;
  KernelSpec spec;
  std::vector<OutputValue> column;
};

std::vector<NamedGram> random_columns(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int n = 40;
  std::vector<OutputValue> unit, real, cats, bags, curves;
  for (int i = 0; i < n; ++i) {
    unit.emplace_back(u01(gen));
    real.emplace_back(nd(gen));
    cats.emplace_back(Categorical{static_cast<int>(gen() % 4)});
    DistSample bag;
    const double shift = nd(gen);
    for (int k = 0; k < 15; ++k) bag.values.push_back(shift + nd(gen));
    bags.emplace_back(std::move(bag));
    std::vector<double> vals;
    for (int t = 0; t < 12; ++t) vals.push_back(std::sin(0.5 * t + shift) + 0.1 * nd(gen));
    curves.emplace_back(curve(std::move(vals)));
  }
  const MarginalDist uni = MarginalDist::uniform(0, 1);
  return {
      {"linear", KernelSpec::linear(), real},
      {"gaussian", KernelSpec::gaussian(0.7), real},
      {"dirac", KernelSpec::dirac(4), cats},
      {"sobolev1", KernelSpec::sobolev(1), unit},
      {"sobolev2", KernelSpec::sobolev(2), unit},
      {"sobolev3", KernelSpec::sobolev(3), unit},
      {"durrande", KernelSpec::durrande(KernelSpec::gaussian(0.3), uni), unit},
      {"stein", KernelSpec::stein(KernelSpec::gaussian(1.0), normal_score()), real},
      {"distribution", KernelSpec::distribution_embedding(1.0, 0.8, KernelSpec::gaussian(1.0)), bags},
      {"wasserstein", KernelSpec::wasserstein_embedding(1.0, 0.5), bags},
      {"alignment", KernelSpec::global_alignment(1.0), curves},
  };
}

TEST(KernelProperties, SymmetricAndPsdOnRandomSamples) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& c : random_columns(seed)) {
      const GramMatrix g = gram(c.spec, std::span<const OutputValue>(c.column));
      const auto n = static_cast<double>(g.rows());
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        EXPECT_EQ(g(i, i), eval_kernel(c.spec, c.column[i], c.column[i])) << c.name;
        for (Eigen::Index j = 0; j < i; ++j) {
          EXPECT_EQ(eval_kernel(c.spec, c.column[i], c.column[j]),
                    eval_kernel(c.spec, c.column[j], c.column[i]))
              << c.name;
          EXPECT_EQ(g(i, j), g(j, i)) << c.name;
        }
      }
      EXPECT_GE(min_eigenvalue(g), -n * 1e-10) << c.name << " seed " << seed;
    }
  }
}

TEST(KernelProperties, ScalarGramFastPathMatchesEntries) {
  std::vector<double> xs = {-2.0, -0.1, 0.0, 0.4, 3.3};
  std::vector<OutputValue> ys(xs.begin(), xs.end());
  const KernelSpec g = KernelSpec::gaussian(0.9);
  const GramMatrix a = gram(g, std::span<const double>(xs));
  const GramMatrix b = gram(g, std::span<const OutputValue>(ys));
  const GramMatrix c = cross_gram(g, ys, ys);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      EXPECT_NEAR(a(i, j), eval_kernel(g, xs[i], xs[j]), 1e-15);
      EXPECT_NEAR(b(i, j), a(i, j), 1e-15);
      EXPECT_NEAR(c(i, j), a(i, j), 1e-15);
    }
  }
}

TEST(ProductKernel, ExpansionOverNonEmptySubsets) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int d = 1; d <= 4; ++d) {
    std::vector<KernelSpec> factors;
    for (int l = 0; l < d; ++l) factors.push_back(KernelSpec::sobolev(1 + l % 2));
    const KernelSpec prod = KernelSpec::product_zero_mean(factors);
    std::vector<int> all(d);
    for (int l = 0; l < d; ++l) all[l] = l;
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> a(d), b(d);
      for (int l = 0; l < d; ++l) {
        a[l] = u01(gen);
        b[l] = u01(gen);
      }
      double expansion = 0.0;
      for (unsigned bits = 1; bits < (1u << d); ++bits) {
        double term = 1.0;
        for (int l = 0; l < d; ++l) {
          if (bits >> l & 1u) term *= sobolev_kernel(1 + l % 2, a[l], b[l]);
        }
        expansion += term;
      }
      EXPECT_NEAR(eval_product_kernel(prod, a, b, all) - 1.0, expansion, 1e-10);
    }
  }
}

// ---------------------------------------------------------------------------
// Specs and bandwidths.

TEST(KernelSpecText, RoundTrips) {
  for (const char* text :
       {"linear", "gaussian:sigma=0.5", "dirac:levels=3", "sobolev:r=2",
        "sobolev:r=1,marginal=(uniform:-1,2)",
        "durrande:base=(gaussian:sigma=1),marginal=(uniform:0,1)",
        "distribution:sigma2=1,lambda=0.5,inner=(gaussian:sigma=2)", "wasserstein:sigma2=1,lambda=2",
        "alignment:bandwidth=0.5", "stein:base=(gaussian:sigma=1)",
        "product:(sobolev:r=1),(sobolev:r=2)"}) {
    const KernelSpec spec = parse_kernel_spec(text);
    EXPECT_EQ(parse_kernel_spec(spec.describe()).describe(), spec.describe()) << text;
  }
  expect_code([] { (void)parse_kernel_spec("gaussian:sigma=-1"); }, ErrorCode::Domain);
  expect_code([] { (void)parse_kernel_spec("nonsense"); }, ErrorCode::Parse);
  expect_code([] { (void)parse_marginal("uniform:2,1"); }, ErrorCode::Domain);
}

TEST(ResolveBandwidths, MedianRules) {
  const auto ys = scalars({0, 1, 3});
  const KernelSpec r = resolve_bandwidths(KernelSpec::gaussian_median(), ys);
  ASSERT_NE(r.get_if<GaussianKernel>(), nullptr);
  EXPECT_EQ(r.get_if<GaussianKernel>()->sigma, 2.0);
  EXPECT_FALSE(r.needs_resolution());
}

TEST(ResolveBandwidths, FusedDistributionGramMatchesTwoStep) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<OutputValue> bags;
  for (int i = 0; i < 25; ++i) {
    DistSample b;
    const double s = nd(gen);
    for (int k = 0; k < 20; ++k) b.values.push_back(s * 2.0 + nd(gen));
    bags.emplace_back(std::move(b));
  }
  const KernelSpec spec = parse_kernel_spec("distribution:sigma2=1,lambda=median,inner=(gaussian:sigma=median)");
  KernelSpec resolved;
  const GramMatrix fused = resolve_and_gram(spec, bags, &resolved);
  const GramMatrix two_step = gram(resolve_bandwidths(spec, bags), std::span<const OutputValue>(bags));
  EXPECT_LT((fused - two_step).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_FALSE(resolved.needs_resolution());
}

}  // namespace
}  // namespace kgsa
