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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "kgsa/testbed.hpp"
#include "test_util.hpp"

namespace kgsa {
namespace {

using testing::expect_code;
constexpr double kPi = std::numbers::pi;

TEST(Ishigami, HandValues) {
  const double z[3] = {0, 0, 0};
  EXPECT_EQ(ishigami(z), 0.0);
  const double a[4] = {kPi / 2, 0, 0, 2.5};
  EXPECT_NEAR(ishigami(a), 1.0, 1e-15);
  const double b[3] = {kPi / 2, kPi / 2, 1};
  EXPECT_NEAR(ishigami(b), 8.1, 1e-14);
  const double bad[3] = {3.5, 0, 0};
  expect_code([&] { (void)ishigami(bad); }, ErrorCode::Domain);
  const double two[2] = {0, 0};
  expect_code([&] { (void)ishigami(two); }, ErrorCode::Domain);
}

TEST(Ishigami, DummyIsIgnored) {
  Rng rng(1);
  const Model m = ishigami_model(true);
  const double a[4] = {0.3, -1.1, 2.0, -3.0};
  const double b[4] = {0.3, -1.1, 2.0, 1.7};
  EXPECT_EQ(std::get<double>(m(a, rng)), std::get<double>(m(b, rng)));
}

// ---------------------------------------------------------------------------

double stochastic_mean_oracle(const double* x) {
  // E[(x1 + 2 x2 + U1) sin(c + N)] = (x1 + 2 x2 + 1/2) sin(c) e^{-1/2}.
  const double c = 3 * x[2] - 4 * x[3];
  double lin = 0.0;
  for (int i = 0; i < 5; ++i) lin += (i + 1) * x[i];
  return (x[0] + 2 * x[1] + 0.5) * std::sin(c) * std::exp(-0.5) + 1.5 + 2.5 * x[4] + lin;
}

TEST(StochasticSim, MeanMatchesClosedForm) {
  for (const auto& xv : {std::vector<double>{0.1, 0.7, 0.3, 0.9, 0.5}, std::vector<double>{1, 0, 0.5, 0.2, 0.95}}) {
    Rng rng(42);
    const DistSample s = stochastic_sim(xv, 100000, rng);
    ASSERT_EQ(s.values.size(), 100000u);
    EXPECT_NEAR(testing::mean(s.values), stochastic_mean_oracle(xv.data()), 0.03);
  }
}

TEST(StochasticSim, ZeroInputHasNoLinearOffset) {
  const std::vector<double> x(5, 0.0);
  Rng rng(3);
  const DistSample s = stochastic_sim(x, 20000, rng);
  // With x = 0 the output is U1 sin(N) + U2 with mean 1.5.
  EXPECT_NEAR(testing::mean(s.values), 1.5, 0.02);
  const std::vector<double> bad = {0, 0, 0, 0, 1.2};
  expect_code([&] { (void)stochastic_sim(bad, 10, rng); }, ErrorCode::Domain);
}

TEST(StochasticSim, ShiftInX5IsPathwiseFiveDeltaB) {
  const double delta = 0.2;
  std::vector<double> x = {0.3, 0.4, 0.5, 0.6, 0.1};
  std::vector<double> y = x;
  y[4] += delta;
  Rng r1(77), r2(77);
  const DistSample a = stochastic_sim(x, 500, r1);
  const DistSample b = stochastic_sim(y, 500, r2);
  int shifted = 0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double d = b.values[k] - a.values[k] - delta * 5;  // sum_i i x_i term moves by 5 delta
    const bool zero = std::fabs(d) < 1e-12;
    const bool five = std::fabs(d - 5 * delta) < 1e-12;
    EXPECT_TRUE(zero || five) << d;
    shifted += five ? 1 : 0;
  }
  EXPECT_GT(shifted, 150);
  EXPECT_LT(shifted, 350);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    best = std::max(best, std::fabs(double(i) / a.size() - double(j) / b.size()));
  }
  return best;
}

TEST(StochasticSim, DistributionInvariantAcrossStreams) {
  const std::vector<double> x = {0.2, 0.9, 0.4, 0.1, 0.6};
  Rng base(5);
  Rng s1 = base.substream({1});
  Rng s2 = base.substream({2});
  const DistSample a = stochastic_sim(x, 10000, s1);
  const DistSample b = stochastic_sim(x, 10000, s2);
  EXPECT_NE(a.values, b.values);
  EXPECT_LT(ks_two_sample(a.values, b.values), 0.03);
}

// ---------------------------------------------------------------------------

SirParams mid_params() {
  const InputSampler sampler = sir_sampler();
  std::vector<double> mid;
  for (const auto& m : sampler.marginals()) mid.push_back(m.mean());
  return SirParams::from_inputs(mid);
}

TEST(Sir, InputRangesAndOrder) {
  const InputSampler sampler = sir_sampler();
  const auto& m = sampler.marginals();
  ASSERT_EQ(m.size(), 6u);
  EXPECT_NEAR(m[0].quantile(0.0), 5.9e-9, 1e-20);
  EXPECT_NEAR(m[0].quantile(1.0), 6.1e-9, 1e-20);
  EXPECT_NEAR(m[5].quantile(0.0), 0.32, 1e-15);
  const double x[6] = {6e-9, 0.03, 10, 7, 5, 0.36};
  const SirParams p = SirParams::from_inputs(x);
  EXPECT_NEAR(p.eta, 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(p.nu, 1.0 / 5.0, 1e-15);
  EXPECT_EQ(sir_input_names().size(), 6u);
}

TEST(Sir, NoTransmissionMatchesExponentialDecay) {
  SirParams p = mid_params();
  p.tau0 = 0.0;
  const SirTrajectory tr = sir_integrate(p, 0.1, 30.0);
  const double i0 = p.chi2 / (p.f * p.nu);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    EXPECT_EQ(tr.s[k], p.s0);
  }
  const double exact = i0 * std::exp(-p.nu * 30.0);
  EXPECT_NEAR(tr.i.back() / exact, 1.0, 1e-6);
}

TEST(Sir, Rk4RefinementFactor) {
  SirParams p = mid_params();
  p.tau0 = 0.0;
  const double i0 = p.chi2 / (p.f * p.nu);
  const double exact = i0 * std::exp(-p.nu * 30.0);
  const double e1 = std::fabs(sir_integrate(p, 1.0, 30.0).i.back() - exact);
  const double e2 = std::fabs(sir_integrate(p, 0.5, 30.0).i.back() - exact);
  EXPECT_GE(e1 / e2, 12.0);
}

TEST(Sir, InitialConditions) {
  SirParams p = mid_params();
  const SirTrajectory tr = sir_integrate(p, 0.1, 1.0);
  const double i0 = p.chi2 / (p.f * p.nu);
  EXPECT_NEAR(tr.i[0], i0, 1e-12 * i0);
  EXPECT_NEAR(tr.u[0], (1 - p.f) * p.nu / (p.eta + p.chi2) * i0, 1e-12 * i0);
  EXPECT_EQ(tr.r[0], 1.0);
  p.f = 1.0 - 1e-12;
  EXPECT_LT(sir_integrate(p, 0.1, 1.0).u[0], 1e-9);
}

TEST(Sir, ConservationAndMonotoneSusceptibles) {
  const SirParams p = mid_params();
  const SirTrajectory tr = sir_integrate(p);
  const double total0 = tr.s[0] + tr.i[0] + tr.r[0] + tr.u[0] + tr.recovered[0];
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double total = tr.s[k] + tr.i[k] + tr.r[k] + tr.u[k] + tr.recovered[k];
    EXPECT_NEAR(total / total0, 1.0, 1e-6);
    EXPECT_GE(std::min({tr.s[k], tr.i[k], tr.r[k], tr.u[k]}), 0.0);
    if (k > 0) EXPECT_LE(tr.s[k], tr.s[k - 1]);
  }
}

TEST(Sir, MidRangeInfectedIsUnimodalAndGridConverged) {
  const SirParams p = mid_params();
  const SirCurves c = sir_simulate(p, 0.1, 120.0);
  const SirCurves f = sir_simulate(p, 0.05, 120.0);
  const auto& v = c.infected.values;
  const auto peak = std::max_element(v.begin(), v.end()) - v.begin();
  EXPECT_GT(peak, 0);
  EXPECT_LT(peak, static_cast<long>(v.size()) - 1);
  for (long k = 1; k <= peak; ++k) EXPECT_GE(v[k], v[k - 1]);
  for (std::size_t k = peak + 1; k < v.size(); ++k) EXPECT_LE(v[k], v[k - 1]);
  const double vmax = v[peak];
  for (std::size_t k = 0; k < v.size(); ++k) {
    EXPECT_NEAR(v[k], f.infected.values[2 * k], 1e-4 * vmax);
  }
}

TEST(Sir, ResampleAndErrors) {
  const SirCurves c = sir_resample(sir_simulate(mid_params()), 2.0);
  EXPECT_EQ(c.infected.times.size(), 61u);
  EXPECT_NEAR(c.infected.times[1], 2.0, 1e-12);
  expect_code([] { (void)sir_integrate(mid_params(), 0.3, 1.0); }, ErrorCode::Domain);
  SirParams p = mid_params();
  p.tau0 = 1e-5;  // explosive transmission; RK4 at a coarse step overshoots below zero
  expect_code([&] { (void)sir_integrate(p, 0.5, 30.0); }, ErrorCode::Instability);
}

// ---------------------------------------------------------------------------

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
  return r;
}

double spearman(const InputMatrix& x, int a, int b) {
  std::vector<double> ca(x.rows()), cb(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    ca[i] = x(i, a);
    cb[i] = x(i, b);
  }
  const auto ra = ranks(ca), rb = ranks(cb);
  const double ma = testing::mean(ra), mb = testing::mean(rb);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(GaussianCopula, IndependenceAndCorrelation) {
  const std::vector<MarginalDist> m = {MarginalDist::uniform(0, 1), MarginalDist::normal(2, 3),
                                       MarginalDist::uniform(-1, 1)};
  const InputMatrix ind = gaussian_copula_sample(Eigen::MatrixXd::Identity(3, 3), m, 2000, 1);
  EXPECT_LT(std::fabs(spearman(ind, 0, 1)), 0.05);
  EXPECT_LT(std::fabs(spearman(ind, 1, 2)), 0.05);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(3, 3);
  corr(0, 1) = corr(1, 0) = 0.99;
  const InputMatrix dep = gaussian_copula_sample(corr, m, 2000, 2);
  EXPECT_GT(spearman(dep, 0, 1), 0.9);
}

TEST(GaussianCopula, MarginalsRespected) {
  const std::vector<MarginalDist> m = {MarginalDist::uniform(0, 1), MarginalDist::normal(2, 3)};
  Eigen::MatrixXd corr(2, 2);
  corr << 1, 0.6, 0.6, 1;
  const InputMatrix x = gaussian_copula_sample(corr, m, 2000, 3);
  for (int l = 0; l < 2; ++l) {
    std::vector<double> col(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[i] = x(i, l);
    std::sort(col.begin(), col.end());
    double ks = 0.0;
    const double n = static_cast<double>(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double f = m[l].cdf(col[i]);
      ks = std::max({ks, std::fabs(f - i / n), std::fabs((i + 1) / n - f)});
    }
    EXPECT_LT(ks, 0.04) << "column " << l;
  }
}

TEST(GaussianCopula, NotPsdRejected) {
  Eigen::MatrixXd corr(2, 2);
  corr << 1, 1.5, 1.5, 1;
  expect_code([&] { (void)gaussian_copula_sample(corr, {MarginalDist::uniform(0, 1), MarginalDist::uniform(0, 1)}, 10, 1); },
              ErrorCode::NotPsd);
}

TEST(GaussianCopula, ConditionalSampleFixesColumns) {
  Eigen::MatrixXd corr(2, 2);
  corr << 1, 0.8, 0.8, 1;
  const InputSampler s = InputSampler::gaussian_copula(corr, {MarginalDist::uniform(0, 1), MarginalDist::uniform(0, 1)});
  Rng rng(4);
  const double x[2] = {0.95, 0.5};
  const InputMatrix c = s.conditional_sample(Subset::of({0}), x, 4000, rng);
  double m = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    EXPECT_EQ(c(i, 0), 0.95);
    m += c(i, 1);
  }
  // Strong positive dependence pulls the free column towards the top.
  EXPECT_GT(m / c.rows(), 0.75);
}

TEST(CategoricalSynthetic, LevelsAndSampler) {
  const CategoricalSynthetic m = CategoricalSynthetic::standard();
  EXPECT_EQ(m.num_levels(), 3);
  Rng rng(1);
  const InputMatrix x = m.sampler().sample(500, rng);
  std::vector<int> counts(3, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) ++counts[m.level(row_span(x, i))];
  for (int c : counts) EXPECT_GT(c, 25);
}

// ---------------------------------------------------------------------------
// Exact enumeration.

DiscreteModel fair_coin() {
  DiscreteModel m;
  m.atoms = {{{0.0}, OutputValue(0.0), 0.5}, {{1.0}, OutputValue(1.0), 0.5}};
  return m;
}

// Three inputs on {0, 1/2, 1} with a non-product law and two output values per state.
DiscreteModel random_model(std::uint64_t seed, bool independent) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  DiscreteModel m;
  double total = 0.0;
  const double grid[3] = {0.0, 0.5, 1.0};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        const std::vector<double> x = {grid[a], grid[b], grid[c]};
        const double w = independent ? 1.0 : u(gen);
        const double f = std::sin(2 * x[0]) + x[1] * x[2] * 3 + x[0] * x[0];
        const double split = u(gen);
        m.atoms.push_back({x, OutputValue(f), w * split});
        m.atoms.push_back({x, OutputValue(f + 1.0 + x[1]), w * (1.2 - split)});
        total += w * 1.2;
      }
    }
  }
  for (auto& atom : m.atoms) atom.prob /= total;
  return m;
}

TEST(DiscreteEnumerate, FairCoin) {
  const DiscreteModel m = fair_coin();
  EXPECT_NEAR(discrete_enumerate(m, SobolClosed{}, Subset::of({0})), 0.25, 1e-15);
  EXPECT_NEAR(discrete_enumerate(m, MmdClosed{KernelSpec::linear()}, Subset::of({0})), 0.25, 1e-15);
  EXPECT_NEAR(discrete_variance(m), 0.25, 1e-15);
}

TEST(DiscreteEnumerate, IndependentPairHasZeroHsic) {
  DiscreteModel m;
  const double px[2] = {0.3, 0.7}, py[2] = {0.6, 0.4};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      m.atoms.push_back({{0.25 + 0.5 * i}, OutputValue(static_cast<double>(j)), px[i] * py[j]});
    }
  }
  const KernelSpec in = KernelSpec::product_zero_mean({KernelSpec::sobolev(1)});
  EXPECT_NEAR(discrete_enumerate(m, HsicClosed{in, KernelSpec::gaussian(1.0)}, Subset::of({0})), 0.0, 1e-15);
}

TEST(DiscreteEnumerate, LawOfTotalVariance) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DiscreteModel m = random_model(seed, false);
    for (const KernelSpec& k : {KernelSpec::linear(), KernelSpec::gaussian(0.7)}) {
      const double tot = discrete_mmd_total(m, k);
      for (std::uint32_t bits = 0; bits < 8; ++bits) {
        const Subset a{bits};
        const double closed = discrete_enumerate(m, MmdClosed{k}, a.complement(3));
        const double comp = discrete_enumerate(m, ComplementaryClosed{k}, a);
        EXPECT_NEAR(closed + comp, tot, 1e-12) << "A = " << a.label();
      }
    }
  }
}

TEST(DiscreteEnumerate, LinearKernelTableEqualsSobolTable) {
  const DiscreteModel m = random_model(9, false);
  EXPECT_NEAR(discrete_mmd_total(m, KernelSpec::linear()), discrete_variance(m), 1e-12);
  for (std::uint32_t bits = 1; bits < 8; ++bits) {
    EXPECT_NEAR(discrete_enumerate(m, MmdClosed{KernelSpec::linear()}, Subset{bits}),
                discrete_enumerate(m, SobolClosed{}, Subset{bits}), 1e-12);
  }
}

TEST(DiscreteEnumerate, DiracMmdIndexIsOneVsAllSobol) {
  const double px[2] = {0.5, 0.5};
  const double py[2][3] = {{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}};
  DiscreteModel m;
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 3; ++i) m.atoms.push_back({{double(s)}, OutputValue(Categorical{i}), px[s] * py[s][i]});
  }
  const KernelSpec dirac = KernelSpec::dirac(3);
  const double index = discrete_enumerate(m, MmdClosed{dirac}, Subset::of({0})) / discrete_mmd_total(m, dirac);
  EXPECT_NEAR(index, categorical_one_vs_all({0.5, 0.5}, {{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}}), 1e-12);
  EXPECT_NEAR(index, 0.067669172932330823, 1e-12);
}

TEST(DiscreteEnumerate, HsicPureTermsSumToTotal) {
  const DiscreteModel m = random_model(4, true);
  const MarginalDist grid = MarginalDist::empirical({0.0, 0.5, 1.0});
  const KernelSpec factor = KernelSpec::durrande(KernelSpec::gaussian(0.6), grid);
  const KernelSpec in = KernelSpec::product_zero_mean({factor, factor, factor});
  const KernelSpec out = KernelSpec::gaussian(1.0);
  double sum = 0.0;
  for (std::uint32_t bits = 1; bits < 8; ++bits) {
    sum += discrete_enumerate(m, HsicClosed{in, out, true}, Subset{bits});
  }
  EXPECT_NEAR(sum, discrete_enumerate(m, HsicClosed{in, out, false}, Subset::full(3)), 1e-10);
}

TEST(DiscreteEnumerate, ValidationAndSize) {
  DiscreteModel m = fair_coin();
  m.atoms[0].prob = 0.4;
  expect_code([&] { m.validate(); }, ErrorCode::Domain);
  DiscreteModel big;
  for (std::size_t i = 0; i <= kMaxDiscreteSupport; ++i) {
    big.atoms.push_back({{0.0}, OutputValue(0.0), 1.0 / (kMaxDiscreteSupport + 1)});
  }
  expect_code([&] { (void)discrete_variance(big); }, ErrorCode::TooLarge);
}

}  // namespace
}  // namespace kgsa
