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
#include <numeric>

#include <gtest/gtest.h>

#include "kgsa/estimators.hpp"
#include "kgsa/testbed.hpp"
#include "test_util.hpp"

namespace kgsa {
namespace {

using testing::expect_code;

InputSampler unit_cube(int d) {
  return InputSampler::independent(std::vector<MarginalDist>(d, MarginalDist::uniform(0, 1)));
}

Model first_input(int d) {
  return Model(d, [](std::span<const double> x, Rng&) { return OutputValue(x[0]); }, "x1");
}

Model constant(int d) {
  return Model(d, [](std::span<const double>, Rng&) { return OutputValue(2.0); }, "const");
}

SampleSet draw(const Model& model, const InputSampler& sampler, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  SampleSet s;
  s.inputs = sampler.sample(n, rng);
  s.outputs = model.evaluate_rows(s.inputs, rng.substream({1}));
  return s;
}

// ---------------------------------------------------------------------------
// Double loop

TEST(DoubleLoop, ConstantModelIsZero) {
  EstimatorConfig cfg;
  cfg.n = 20;
  cfg.m = 30;
  const auto r = double_loop_mmd(constant(2), unit_cube(2), Subset::of({0}), KernelSpec::gaussian(1), cfg);
  EXPECT_NEAR(r.closed, 0.0, 1e-12);
  EXPECT_NEAR(r.total, 0.0, 1e-12);
}

TEST(DoubleLoop, EmptySetCostsNothing) {
  const Model m = first_input(2);
  const auto r = double_loop_mmd(m, unit_cube(2), Subset::empty(), KernelSpec::linear(), {});
  EXPECT_EQ(r.closed, 0.0);
  EXPECT_EQ(m.evaluations(), 0u);
}

TEST(DoubleLoop, LinearKernelRecoversVariance) {
  EstimatorConfig cfg;
  cfg.n = 500;
  cfg.m = 500;
  cfg.seed = 2;
  const Model m = first_input(2);
  const auto r = double_loop_mmd(m, unit_cube(2), Subset::of({0}), KernelSpec::linear(), cfg);
  EXPECT_NEAR(r.closed, 1.0 / 12.0, 0.01);
  EXPECT_NEAR(r.total, 1.0 / 12.0, 0.01);
  EXPECT_EQ(m.evaluations(), (cfg.n + 1) * cfg.m);
  const auto other = double_loop_mmd(m, unit_cube(2), Subset::of({1}), KernelSpec::linear(), cfg);
  EXPECT_LT(other.closed, 0.01);
}

TEST(DoubleLoop, DependentSamplerUsesConditionalLaw) {
  Eigen::MatrixXd corr(2, 2);
  corr << 1, 0.9, 0.9, 1;
  const InputSampler s = InputSampler::gaussian_copula(corr, {MarginalDist::uniform(0, 1), MarginalDist::uniform(0, 1)});
  EstimatorConfig cfg;
  cfg.n = 200;
  cfg.m = 200;
  // Y = X1 is strongly explained by the correlated X2.
  const auto r = double_loop_mmd(first_input(2), s, Subset::of({1}), KernelSpec::linear(), cfg);
  EXPECT_GT(r.closed / r.total, 0.6);
}

// ---------------------------------------------------------------------------
// Pick-freeze

TEST(PickFreeze, DesignColumns) {
  const PickFreezeDesign d = pick_freeze_design(unit_cube(3), 50, 1);
  ASSERT_EQ(d.x_tilde.size(), 3u);
  for (int l = 0; l < 3; ++l) {
    for (int c = 0; c < 3; ++c) {
      const InputMatrix& src = c == l ? d.x : d.x_prime;
      EXPECT_TRUE(d.x_tilde[l].col(c) == src.col(c));
    }
  }
  EXPECT_FALSE(d.x.col(0) == d.x_prime.col(0));
}

TEST(PickFreeze, DependentSamplerRejected) {
  Eigen::MatrixXd corr(2, 2);
  corr << 1, 0.5, 0.5, 1;
  const InputSampler s = InputSampler::gaussian_copula(corr, {MarginalDist::uniform(0, 1), MarginalDist::uniform(0, 1)});
  expect_code([&] { (void)pick_freeze_design(s, 10, 1); }, ErrorCode::Capability);
}

TEST(PickFreeze, SaltelliSingleInput) {
  const Model m = first_input(1);
  const auto out = evaluate_design(m, pick_freeze_design(unit_cube(1), 2000, 3), 3);
  const auto r = saltelli_sobol(out, 0);
  EXPECT_NEAR(r.v_l / r.v, 1.0, 0.05);
  EXPECT_EQ(m.evaluations(), 3u * 2000u);
}

TEST(PickFreeze, SaltelliIshigamiThirdInput) {
  const Model m = ishigami_model(true);
  const auto out = evaluate_design(m, pick_freeze_design(ishigami_sampler(true), 1000, 11), 11);
  EXPECT_EQ(m.evaluations(), (4u + 2u) * 1000u);
  const auto r = saltelli_sobol(out, 2);
  EXPECT_NEAR(r.v_l / r.v, 0.0, 0.05);
  EXPECT_NEAR(1.0 - r.v_minus_l / r.v, 0.2437, 0.06);
}

TEST(PickFreeze, ConstantOutput) {
  const auto out = evaluate_design(constant(2), pick_freeze_design(unit_cube(2), 100, 1), 1);
  EXPECT_EQ(saltelli_sobol(out, 0).v, 0.0);
  const auto r = pick_freeze_mmd(out, 1, KernelSpec::gaussian(1));
  EXPECT_EQ(r.m_l, 0.0);
  EXPECT_EQ(r.m_minus_l, 0.0);
  EXPECT_NEAR(r.m_tot, 0.0, 1e-15);
}

TEST(PickFreeze, LinearKernelCollapsesToSaltelli) {
  const auto out = evaluate_design(ishigami_model(false), pick_freeze_design(ishigami_sampler(false), 500, 5), 5);
  for (int l = 0; l < 3; ++l) {
    const auto s = saltelli_sobol(out, l);
    const auto k = pick_freeze_mmd(out, l, KernelSpec::linear());
    EXPECT_NEAR(k.m_l, s.v_l, 1e-12 * s.v);
    EXPECT_NEAR(k.m_minus_l, s.v_minus_l, 1e-12 * s.v);
    EXPECT_NEAR(k.m_tot, s.v, 1e-12 * s.v);
  }
}

TEST(PickFreeze, GaussianKernelDetectsIshigamiThirdInput) {
  const auto out = evaluate_design(ishigami_model(false), pick_freeze_design(ishigami_sampler(false), 1000, 8), 8);
  const auto r = pick_freeze_mmd(out, 2, KernelSpec::gaussian(3.0));
  EXPECT_GT(r.m_l / r.m_tot, 0.05);
}

// ---------------------------------------------------------------------------
// Ranks

TEST(RankPermutation, Examples) {
  const std::vector<double> v = {0.3, 0.1, 0.2};
  EXPECT_EQ(rank_permutation(v), (std::vector<std::size_t>{1, 2, 0}));
  const std::vector<double> sorted = {1, 2, 3, 4};
  EXPECT_EQ(rank_permutation(sorted), (std::vector<std::size_t>{1, 2, 3, 0}));
  const std::vector<double> two = {5, -5};
  EXPECT_EQ(rank_permutation(two), (std::vector<std::size_t>{1, 0}));
  const std::vector<double> ties = {1, 1, 1};
  EXPECT_EQ(rank_permutation(ties), (std::vector<std::size_t>{1, 2, 0}));
  const std::vector<double> one = {1};
  expect_code([&] { (void)rank_permutation(one); }, ErrorCode::Domain);
}

TEST(RankPermutation, NoFixedPoints) {
  Rng rng(4);
  std::vector<double> v(101);
  for (auto& x : v) x = rng.uniform();
  const auto next = rank_permutation(v);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NE(next[i], i);
}

TEST(RankMmd, Examples) {
  const SampleSet lin = draw(first_input(2), unit_cube(2), 5000, 1);
  EXPECT_NEAR(rank_mmd(lin, 0, KernelSpec::linear()), 1.0 / 12.0, 0.005);
  const SampleSet ind = draw(first_input(2), unit_cube(2), 2000, 2);
  EXPECT_LT(std::fabs(rank_mmd(ind, 1, KernelSpec::gaussian(0.3))), 0.05);
  const SampleSet flat = draw(constant(2), unit_cube(2), 100, 3);
  EXPECT_EQ(rank_mmd(flat, 0, KernelSpec::gaussian(1)), 0.0);
}

// ---------------------------------------------------------------------------
// Nearest neighbours

TEST(NearestNeighbors, Examples) {
  InputMatrix x(3, 1);
  x << 0.1, 0.5, 0.9;
  EXPECT_EQ(nearest_neighbors(x, Subset::of({0}), 0, 2), (std::vector<std::size_t>{0, 1}));
  // 0.1 and 0.9 are equally far from 0.5; the smaller index wins.
  EXPECT_EQ(nearest_neighbors(x, Subset::of({0}), 1, 2), (std::vector<std::size_t>{1, 0}));
  InputMatrix y(4, 2);
  y << 0, 0, 0, 100, 1, 0, 5, 5;
  // Only column 0 counts.
  EXPECT_EQ(nearest_neighbors(y, Subset::of({0}), 0, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(nearest_neighbors(y, Subset::of({1}), 0, 3), (std::vector<std::size_t>{0, 2, 3}));
}

TEST(NearestNeighbors, StandardizedMetric) {
  // Column 1 is on a much larger scale; after standardization both count equally.
  InputMatrix x(4, 2);
  x << 0, 0, 1, 0, 0, 100, 1, 100;
  const auto nn = nearest_neighbors(x, Subset::of({0, 1}), 0, 4);
  EXPECT_EQ(nn[0], 0u);
  EXPECT_EQ(nn[1], 1u);
  EXPECT_EQ(nn[2], 2u);
  EXPECT_EQ(nn[3], 3u);
}

TEST(Knn, ConstantOutputIsZero) {
  const SampleSet flat = draw(constant(2), unit_cube(2), 200, 1);
  EstimatorConfig cfg;
  EXPECT_EQ(knn_closed_value(flat, Subset::of({0}), KernelSpec::gaussian(1), cfg), 0.0);
  EXPECT_NEAR(knn_complementary_value(flat, Subset::of({0}), KernelSpec::gaussian(1), cfg), 0.0, 1e-15);
}

TEST(Knn, ComplementOfFullSetIsTotal) {
  const SampleSet s = draw(ishigami_model(false), ishigami_sampler(false), 300, 2);
  const KernelSpec k = KernelSpec::gaussian(2.0);
  EstimatorConfig cfg;
  EXPECT_EQ(knn_complementary_value(s, Subset::full(3), k, cfg), mmd_total(gram(k, s.outputs)));
}

TEST(Knn, LinearKernelTargets) {
  const Model m(2, [](std::span<const double> x, Rng&) { return OutputValue(x[0] + x[1] - 1.0); }, "sum");
  const SampleSet s = draw(m, unit_cube(2), 3000, 4);
  EstimatorConfig cfg;
  cfg.n_a = 2000;
  EXPECT_NEAR(knn_closed_value(s, Subset::of({0}), KernelSpec::linear(), cfg), 1.0 / 12.0, 0.012);
  // E Var(Y | X2) = Var X1.
  EXPECT_NEAR(knn_complementary_value(s, Subset::of({0}), KernelSpec::linear(), cfg), 1.0 / 12.0, 0.012);
  EXPECT_NEAR(knn_closed_value(s, Subset::of({0, 1}), KernelSpec::linear(), cfg), 2.0 / 12.0, 0.012);
}

TEST(Knn, AgreesWithRankOnIshigami) {
  const KernelSpec k = KernelSpec::gaussian(3.0);
  std::vector<double> rank, knn;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SampleSet s = draw(ishigami_model(false), ishigami_sampler(false), 1000, seed);
    EstimatorConfig cfg;
    cfg.n_a = 1000;
    cfg.seed = seed;
    const GramMatrix g = gram(k, s.outputs);
    rank.push_back(rank_mmd(g, s.column(0)));
    knn.push_back(knn_closed_value(g, s.inputs, Subset::of({0}), cfg));
  }
  const double spread = std::max(testing::stddev(rank), testing::stddev(knn));
  EXPECT_LT(std::fabs(testing::mean(rank) - testing::mean(knn)), 2.0 * spread);
}

TEST(Knn, ComplementaryMatchesEnumerationOnDiscreteModel) {
  // d = 2 inputs on {0, 1}; Y | X is a two-point law.
  DiscreteModel dm;
  const double px = 0.25;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      dm.atoms.push_back({{double(a), double(b)}, OutputValue(a + 2.0 * b), px * 0.7});
      dm.atoms.push_back({{double(a), double(b)}, OutputValue(a + 2.0 * b + 1.5 * a), px * 0.3});
    }
  }
  const KernelSpec k = KernelSpec::gaussian(1.0);
  const double target = discrete_enumerate(dm, ComplementaryClosed{k}, Subset::of({0}));

  // Continuous jitter keeps neighbour search informative while the cells stay separated.
  const Model m(2, [](std::span<const double> x, Rng& rng) {
    const double a = x[0] > 0.5 ? 1.0 : 0.0, b = x[1] > 0.5 ? 1.0 : 0.0;
    return OutputValue(a + 2.0 * b + (rng.uniform() < 0.3 ? 1.5 * a : 0.0));
  }, "cells");
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SampleSet s = draw(m, unit_cube(2), 2000, seed);
    EstimatorConfig cfg;
    cfg.seed = seed;
    cfg.n_i = 20;
    est.push_back(knn_complementary_value(s, Subset::of({0}), k, cfg));
  }
  EXPECT_LT(std::fabs(testing::mean(est) - target), 2.0 * testing::stddev(est) + 0.01) << target;
}

// ---------------------------------------------------------------------------
// HSIC

KernelSpec sobolev_product(int d) {
  return KernelSpec::product_zero_mean(std::vector<KernelSpec>(d, KernelSpec::sobolev(1)));
}

// Direct double sum over kernel evaluations.
double hsic_oracle(const SampleSet& s, Subset a, const KernelSpec& factor, const KernelSpec& out, bool u) {
  const std::size_t n = s.n();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (u && i == j) continue;
      double kx = 1.0;
      for (int l : a.indices()) kx *= 1.0 + eval_kernel(factor, s.inputs(i, l), s.inputs(j, l));
      acc += (kx - 1.0) * eval_kernel(out, s.outputs[i], s.outputs[j]);
    }
  }
  return acc / (u ? double(n) * (n - 1) : double(n) * n);
}

TEST(Hsic, MatchesDirectSums) {
  const Model m(3, [](std::span<const double> x, Rng&) { return OutputValue(std::sin(6 * x[0]) + x[1] * x[2]); }, "f");
  const SampleSet s = draw(m, unit_cube(3), 60, 1);
  const KernelSpec out = KernelSpec::gaussian(0.5);
  const HsicGrams g = hsic_grams(s, sobolev_product(3), out);
  for (std::uint32_t bits = 0; bits < 8; ++bits) {
    EXPECT_NEAR(hsic_stat(g, Subset{bits}, HsicFlavor::V),
                hsic_oracle(s, Subset{bits}, KernelSpec::sobolev(1), out, false), 1e-12);
    EXPECT_NEAR(hsic_stat(g, Subset{bits}, HsicFlavor::U),
                hsic_oracle(s, Subset{bits}, KernelSpec::sobolev(1), out, true), 1e-12);
  }
  EXPECT_EQ(hsic_stat(g, Subset::empty(), HsicFlavor::U), 0.0);
}

TEST(Hsic, PureTermsSumToFullStatistic) {
  const SampleSet s = draw(ishigami_model(false), ishigami_sampler(false), 200, 3);
  const std::vector<MarginalDist> laws(3, MarginalDist::uniform(-std::numbers::pi, std::numbers::pi));
  const KernelSpec in = KernelSpec::product_zero_mean(
      std::vector<KernelSpec>(3, KernelSpec::sobolev(1, MarginalDist::uniform(-std::numbers::pi, std::numbers::pi))));
  const HsicGrams g = hsic_grams(s, in, KernelSpec::gaussian(3.0), laws);
  for (HsicFlavor f : {HsicFlavor::V, HsicFlavor::U}) {
    double sum = 0.0;
    for (std::uint32_t bits = 1; bits < 8; ++bits) sum += hsic_pure_stat(g, Subset{bits}, f);
    EXPECT_NEAR(sum, hsic_stat(g, Subset::full(3), f), 1e-10);
    const ClosedValueTable t = hsic_table(g, f);
    EXPECT_EQ(t.total(), hsic_stat(g, Subset::full(3), f));
  }
}

TEST(Hsic, NonZeroMeanInputKernelRejected) {
  const SampleSet s = draw(first_input(1), unit_cube(1), 50, 1);
  const KernelSpec in = KernelSpec::product_zero_mean({KernelSpec::gaussian(0.3)});
  expect_code([&] { (void)hsic_grams(s, in, KernelSpec::gaussian(1), {MarginalDist::uniform(0, 1)}); },
              ErrorCode::AssumptionViolated);
}

TEST(Hsic, UMinusVShrinksLikeOneOverN) {
  const Model m(2, [](std::span<const double> x, Rng&) { return OutputValue(x[0] * x[0] + x[1]); }, "f");
  std::vector<double> log_n, log_gap;
  for (std::size_t n : {100u, 200u, 400u, 800u, 1600u}) {
    double gap = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const HsicGrams g = hsic_grams(draw(m, unit_cube(2), n, seed), sobolev_product(2), KernelSpec::gaussian(0.5));
      gap += std::fabs(hsic_stat(g, Subset::full(2), HsicFlavor::U) - hsic_stat(g, Subset::full(2), HsicFlavor::V));
    }
    log_n.push_back(std::log(double(n)));
    log_gap.push_back(std::log(gap / 3.0));
  }
  const double mx = testing::mean(log_n), my = testing::mean(log_gap);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxy += (log_n[i] - mx) * (log_gap[i] - my);
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
  }
  EXPECT_LE(sxy / sxx, -0.9);
}

TEST(Hsic, IndependentOutputWithinConcentrationBand) {
  // Y ignores X. Kernels are rescaled to [0, 1] through the product bound.
  const Model m(1, [](std::span<const double>, Rng& rng) { return OutputValue(rng.uniform()); }, "noise");
  const std::size_t n = 200;
  const double delta = 0.01;
  // sup |k_1| = 1/3 on [0,1] for the first-order Sobolev kernel, so |(1 + k) - 1| <= 1/3 and
  // dividing by 1/3 puts the input kernel into [-1, 1].
  const double scale = 3.0;
  const double band = 8.0 * std::sqrt(std::log(2.0 / delta) / double(n));
  std::vector<double> stats;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const HsicGrams g = hsic_grams(draw(m, unit_cube(1), n, seed), sobolev_product(1), KernelSpec::gaussian(0.3));
    const double u = scale * hsic_stat(g, Subset::full(1), HsicFlavor::U);
    stats.push_back(u);
    EXPECT_LE(std::fabs(u), band);
  }
  EXPECT_LT(std::fabs(testing::mean(stats)), 3.0 * testing::stddev(stats) / std::sqrt(50.0));
}

// Population HSIC of a discrete model with the density-weighted Gaussian input
// kernel exp(-(x - x')^2 / 2h^2) / sqrt(p(x) p(x')), by enumeration.
double weighted_hsic(const DiscreteModel& m, const std::vector<std::pair<double, double>>& px, double h,
                     const KernelSpec& out) {
  auto p_of = [&](double x) {
    for (const auto& [v, p] : px) {
      if (v == x) return p;
    }
    return 0.0;
  };
  auto kx = [&](double a, double b) {
    return std::exp(-(a - b) * (a - b) / (2 * h * h)) / std::sqrt(p_of(a) * p_of(b));
  };
  const auto& at = m.atoms;
  double joint = 0.0, ex = 0.0, ey = 0.0, cross = 0.0;
  for (const auto& a : at) {
    double row_x = 0.0, row_y = 0.0;
    for (const auto& b : at) {
      const double kxx = kx(a.x[0], b.x[0]);
      const double kyy = eval_kernel(out, a.y, b.y);
      joint += a.prob * b.prob * kxx * kyy;
      ex += a.prob * b.prob * kxx;
      ey += a.prob * b.prob * kyy;
      row_x += b.prob * kxx;
      row_y += b.prob * kyy;
    }
    cross += a.prob * row_x * row_y;
  }
  return joint + ex * ey - 2.0 * cross;
}

TEST(Hsic, DegenerateInputKernelApproachesMmd) {
  const std::vector<std::pair<double, double>> px = {{0.0, 0.2}, {0.3, 0.3}, {0.7, 0.1}, {1.0, 0.4}};
  DiscreteModel m;
  for (const auto& [x, p] : px) {
    m.atoms.push_back({{x}, OutputValue(std::sin(4 * x)), p * 0.6});
    m.atoms.push_back({{x}, OutputValue(x * x - 0.5), p * 0.4});
  }
  const KernelSpec out = KernelSpec::gaussian(0.8);
  const double target = discrete_enumerate(m, MmdClosed{out}, Subset::of({0}));
  double prev = INFINITY;
  for (double h : {0.5, 0.2, 0.1, 0.05}) {
    const double err = std::fabs(weighted_hsic(m, px, h, out) - target);
    EXPECT_LT(err, prev) << "h = " << h;
    prev = err;
  }
  EXPECT_LT(prev, 1e-6);
}

}  // namespace
}  // namespace kgsa
