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

#include <gtest/gtest.h>

#include "kgsa/subset.hpp"
#include "kgsa/testbed.hpp"
#include "test_util.hpp"

namespace kgsa {
namespace {

using testing::expect_code;

// Alternating sum over subsets B of A, written out directly.
double alternating_sum(const ClosedValueTable& t, std::uint32_t a) {
  double acc = 0.0;
  for (std::uint32_t b = a;; b = (b - 1) & a) {
    const int sign = (std::popcount(a) - std::popcount(b)) % 2 == 0 ? 1 : -1;
    acc += sign * (b == 0 ? 0.0 : t.at(Subset{b}));
    if (b == 0) break;
  }
  return acc;
}

TEST(Subset, BitOperations) {
  const Subset a = Subset::of({0, 2});
  EXPECT_EQ(a.bits, 5u);
  EXPECT_TRUE(a.contains(2));
  EXPECT_FALSE(a.contains(1));
  EXPECT_EQ(a.complement(4).bits, 10u);
  EXPECT_EQ(a.with(1).size(), 3);
  EXPECT_EQ(a.without(0).bits, 4u);
  EXPECT_TRUE(Subset::empty().is_empty());
  EXPECT_EQ(Subset::full(3).bits, 7u);
}

TEST(MobiusCombine, TwoInputs) {
  ClosedValueTable t(2, 1.0);
  t.set(Subset::of({0}), 0.2);
  t.set(Subset::of({1}), 0.3);
  t.set(Subset::of({0, 1}), 0.9);
  const auto pure = mobius_combine(t);
  EXPECT_NEAR(pure[3], 0.9 - 0.2 - 0.3, 1e-15);
  EXPECT_EQ(pure[1], 0.2);
  EXPECT_EQ(pure[2], 0.3);
}

TEST(MobiusCombine, SingleInput) {
  ClosedValueTable t(1, 1.0);
  t.set(Subset::of({0}), 0.4);
  EXPECT_EQ(mobius_combine(t)[1], 0.4);
}

TEST(MobiusCombine, AdditiveValuesHaveNoInteractions) {
  const double v[3] = {0.1, 0.25, 0.6};
  ClosedValueTable t(3, 1.0);
  for (std::uint32_t bits = 1; bits < 8; ++bits) {
    double s = 0.0;
    for (int l = 0; l < 3; ++l) {
      if (bits >> l & 1u) s += v[l];
    }
    t.set(Subset{bits}, s);
  }
  const auto pure = mobius_combine(t);
  for (std::uint32_t bits = 1; bits < 8; ++bits) {
    if (std::popcount(bits) > 1) {
      EXPECT_NEAR(pure[bits], 0.0, 1e-12);
    }
    EXPECT_NEAR(pure[bits], alternating_sum(t, bits), 1e-12);
  }
}

TEST(MobiusCombine, MatchesAlternatingSumOnRandomTables) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d = 1; d <= 5; ++d) {
    ClosedValueTable t(d, 1.0);
    for (std::uint32_t bits = 1; bits < (1u << d); ++bits) t.set(Subset{bits}, u(gen));
    const auto pure = mobius_combine(t);
    for (std::uint32_t bits = 1; bits < (1u << d); ++bits) {
      EXPECT_NEAR(pure[bits], alternating_sum(t, bits), 1e-12);
    }
  }
}

TEST(MobiusCombine, IncompleteTableNamesSubset) {
  ClosedValueTable t(2, 1.0);
  t.set(Subset::of({0}), 0.2);
  t.set(Subset::of({0, 1}), 0.9);
  try {
    (void)mobius_combine(t);
    FAIL() << "expected an incomplete-table error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompleteTable);
    EXPECT_NE(std::string(e.what()).find(Subset::of({1}).label()), std::string::npos) << e.what();
  }
}

TEST(Normalize, SumsToOneAndTotalsConsistent) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int d = 1; d <= 6; ++d) {
    const double total = 2.5;
    ClosedValueTable t(d, total);
    for (std::uint32_t bits = 1; bits < (1u << d); ++bits) t.set(Subset{bits}, u(gen));
    t.set(Subset::full(d), total);
    const IndexReport r = normalize(t);
    double sum = 0.0;
    for (std::uint32_t bits = 1; bits < (1u << d); ++bits) sum += r.normalized[bits];
    EXPECT_NEAR(sum, 1.0, 1e-10);
    for (int l = 0; l < d; ++l) {
      double containing = 0.0;
      for (std::uint32_t bits = 1; bits < (1u << d); ++bits) {
        if (bits >> l & 1u) containing += r.normalized[bits];
      }
      EXPECT_NEAR(r.total_index[l], containing, 1e-10);
      EXPECT_EQ(r.first_order[l], r.normalized[1u << l]);
    }
  }
}

TEST(Normalize, SingleInput) {
  ClosedValueTable t(1, 1.0);
  t.set(Subset::of({0}), 0.4);
  const IndexReport r = normalize(t);
  EXPECT_NEAR(r.first_order[0], 0.4, 1e-15);
  EXPECT_NEAR(r.total_index[0], 1.0, 1e-15);  // 1 - closed(empty) / total
}

TEST(Normalize, NonPositiveTotalIsDegenerate) {
  ClosedValueTable t(1, 0.0);
  t.set(Subset::of({0}), 0.0);
  expect_code([&] { (void)normalize(t); }, ErrorCode::DegenerateOutput);
}

TEST(Normalize, NegativeTermsAreFlaggedNotClipped) {
  ClosedValueTable t(2, 1.0);
  t.set(Subset::of({0}), 0.5);
  t.set(Subset::of({1}), 0.6);
  t.set(Subset::of({0, 1}), 1.0);
  const IndexReport r = normalize(t);
  EXPECT_NEAR(r.normalized[3], -0.1, 1e-12);
  EXPECT_TRUE(r.negative_terms);
  ASSERT_EQ(r.negative_subsets.size(), 1u);
  EXPECT_EQ(r.negative_subsets[0].bits, 3u);
}

TEST(Normalize, IshigamiAnalyticIndices) {
  // Variance components from the closed-form integrals of sin and x^4.
  const double a = 7.0, b = 0.1, pi = std::numbers::pi;
  const double v1 = b * std::pow(pi, 4) / 5.0 + b * b * std::pow(pi, 8) / 50.0 + 0.5;
  const double v2 = a * a / 8.0;
  const double v13 = b * b * std::pow(pi, 8) * (1.0 / 18.0 - 1.0 / 50.0);
  const double v = v1 + v2 + v13;
  EXPECT_NEAR(v, a * a / 8.0 + b * std::pow(pi, 4) / 5.0 + b * b * std::pow(pi, 8) / 18.0 + 0.5, 1e-12);

  const IndexReport r = normalize(ishigami_variance_table(true));
  EXPECT_NEAR(r.first_order[0], v1 / v, 1e-12);
  EXPECT_NEAR(r.first_order[1], v2 / v, 1e-12);
  EXPECT_NEAR(r.first_order[2], 0.0, 1e-12);
  EXPECT_NEAR(r.first_order[3], 0.0, 1e-12);
  EXPECT_NEAR(r.normalized[Subset::of({0, 2}).bits], v13 / v, 1e-12);
  EXPECT_NEAR(r.total_index[2], v13 / v, 1e-12);
  EXPECT_NEAR(r.total_index[3], 0.0, 1e-12);
  EXPECT_NEAR(r.first_order[0], 0.3139, 5e-5);
  EXPECT_NEAR(r.first_order[1], 0.4424, 5e-5);
  EXPECT_NEAR(r.normalized[5], 0.2437, 5e-5);
}

TEST(FirstAndTotal, FromSingleAndComplementValues) {
  const IndexReport r = first_and_total({0.2, 0.5}, {0.5, 0.2}, 1.0);
  EXPECT_NEAR(r.first_order[0], 0.2, 1e-15);
  EXPECT_NEAR(r.total_index[0], 0.5, 1e-15);
  EXPECT_NEAR(r.total_index[1], 0.8, 1e-15);
  expect_code([] { (void)first_and_total({0.2}, {0.0}, 0.0); }, ErrorCode::DegenerateOutput);
}

// ---------------------------------------------------------------------------

// Direct evaluation of the one-versus-all ratio.
double one_vs_all_oracle(const std::vector<double>& px, const std::vector<std::vector<double>>& py) {
  const std::size_t k = py[0].size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double marg = 0.0;
    for (std::size_t s = 0; s < px.size(); ++s) marg += px[s] * py[s][i];
    for (std::size_t s = 0; s < px.size(); ++s) num += px[s] * (py[s][i] - marg) * (py[s][i] - marg);
    den += marg * (1.0 - marg);
  }
  return num / den;
}

TEST(CategoricalOneVsAll, Examples) {
  EXPECT_NEAR(categorical_one_vs_all({0.5, 0.5}, {{0.2, 0.8}, {0.2, 0.8}}), 0.0, 1e-15);
  EXPECT_NEAR(categorical_one_vs_all({0.5, 0.5}, {{1.0, 0.0}, {0.0, 1.0}}), 1.0, 1e-15);
  const std::vector<double> px = {0.5, 0.5};
  const std::vector<std::vector<double>> py = {{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}};
  EXPECT_NEAR(categorical_one_vs_all(px, py), one_vs_all_oracle(px, py), 1e-15);
  // Frozen from the oracle: 0.045 / 0.665.
  EXPECT_NEAR(categorical_one_vs_all(px, py), 0.067669172932330823, 1e-15);
  expect_code([] { (void)categorical_one_vs_all({1.0}, {{1.0, 0.0}}); }, ErrorCode::DegenerateOutput);
}

}  // namespace
}  // namespace kgsa
