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

#include "kgsa/shapley.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include "kgsa/error.hpp"
#include "kgsa/rng.hpp"

namespace kgsa {

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::VarianceClosed:
      return "variance";
    case ValueKind::MmdClosed:
      return "mmd";
    case ValueKind::MmdComplementary:
      return "mmd-complementary";
    case ValueKind::HsicClosed:
      return "hsic";
  }
  return "unknown";
}

struct ValueFunction::Cache {
  std::mutex mutex;
  std::unordered_map<std::uint32_t, double> values;
};

ValueFunction::ValueFunction(ValueKind kind, int d, std::function<double(Subset)> fn,
                             double normalizer)
    : kind_(kind),
      d_(d),
      fn_(std::move(fn)),
      normalizer_(normalizer),
      cache_(std::make_shared<Cache>()) {
  require(d >= 1 && d <= kMaxSubsetDimension, ErrorCode::TooLarge,
          "value functions support 1 <= d <= " + std::to_string(kMaxSubsetDimension));
  require(static_cast<bool>(fn_), ErrorCode::Domain, "value function is empty");
}

ValueFunction ValueFunction::from_table(ValueKind kind, const ClosedValueTable& table) {
  return ValueFunction(kind, table.d(), [table](Subset a) { return table.at(a); }, table.total());
}

ValueFunction ValueFunction::complementary(int d, std::function<double(Subset)> fn,
                                           double normalizer) {
  const Subset full = Subset::full(d);
  auto pinned = [fn = std::move(fn), full, normalizer](Subset a) {
    if (a.is_empty()) return 0.0;
    if (a == full) return normalizer;
    return fn(a);
  };
  return ValueFunction(ValueKind::MmdComplementary, d, std::move(pinned), normalizer);
}

double ValueFunction::operator()(Subset a) const {
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->values.find(a.bits); it != cache_->values.end()) return it->second;
  }
  const double value = a.is_empty() && kind_ != ValueKind::MmdComplementary ? 0.0 : fn_(a);
  std::lock_guard lock(cache_->mutex);
  return cache_->values.emplace(a.bits, value).first->second;
}

void ValueFunction::populate_all() const {
  const Subset full = Subset::full(d_);
  for (std::uint32_t bits = 0; bits <= full.bits; ++bits) (void)(*this)(Subset{bits});
}

namespace {

ShapleyReport finish(const ValueFunction& val, std::vector<double> effects, ShapleyMethod method,
                     std::size_t num_perms) {
  require(val.normalizer() > 0.0 && std::isfinite(val.normalizer()), ErrorCode::DegenerateOutput,
          "Shapley normalizer is not positive (constant output?)");
  ShapleyReport report;
  report.method = method;
  report.num_perms = num_perms;
  report.kind = val.kind();
  report.normalizer = val.normalizer();
  for (double& e : effects) {
    e /= val.normalizer();
    if (e < 0.0) report.negative_effects = true;
  }
  report.effects = std::move(effects);
  return report;
}

}  // namespace

ShapleyReport shapley_exact(const ValueFunction& val) {
  const int d = val.d();
  require(d <= kMaxExactShapleyDimension, ErrorCode::TooLarge,
          "exact Shapley effects are limited to d <= " +
              std::to_string(kMaxExactShapleyDimension) + "; use shapley_permutation");
  val.populate_all();
  // weight(|A|) = 1 / (d * C(d-1, |A|)).
  std::vector<double> weight(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    double binom = 1.0;
    for (int k = 1; k <= s; ++k) binom = binom * (d - 1 - s + k) / k;
    weight[s] = 1.0 / (static_cast<double>(d) * binom);
  }
  std::vector<double> effects(static_cast<std::size_t>(d), 0.0);
  const Subset full = Subset::full(d);
  for (int l = 0; l < d; ++l) {
    for (std::uint32_t bits = 0; bits <= full.bits; ++bits) {
      const Subset a{bits};
      if (a.contains(l)) continue;
      effects[l] += weight[a.size()] * (val(a.with(l)) - val(a));
    }
  }
  return finish(val, std::move(effects), ShapleyMethod::ExactSubsets, 0);
}

ShapleyReport shapley_orders(const ValueFunction& val,
                             const std::vector<std::vector<int>>& orders) {
  const int d = val.d();
  require(!orders.empty(), ErrorCode::Domain, "need at least one order");
  std::vector<double> effects(static_cast<std::size_t>(d), 0.0);
  for (const auto& order : orders) {
    require(static_cast<int>(order.size()) == d, ErrorCode::Domain, "order has wrong length");
    Subset prev;
    double prev_value = val(prev);
    for (int l : order) {
      require(l >= 0 && l < d && !prev.contains(l), ErrorCode::Domain,
              "order is not a permutation of the inputs");
      const Subset cur = prev.with(l);
      const double cur_value = val(cur);
      effects[l] += cur_value - prev_value;
      prev = cur;
      prev_value = cur_value;
    }
  }
  for (double& e : effects) e /= static_cast<double>(orders.size());
  return finish(val, std::move(effects), ShapleyMethod::Permutation, orders.size());
}

ShapleyReport shapley_permutation(const ValueFunction& val, std::size_t num_perms,
                                  std::uint64_t seed) {
  require(num_perms >= 1, ErrorCode::Domain, "need at least one permutation");
  Rng rng = Rng(seed).substream({stream_tag::kPermutation});
  std::vector<std::vector<int>> orders(num_perms);
  for (auto& order : orders) {
    order.resize(static_cast<std::size_t>(val.d()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<int>(order));
  }
  return shapley_orders(val, orders);
}

ShapleyReport shapley(const ValueFunction& val, std::optional<std::size_t> num_perms,
                      std::uint64_t seed) {
  if (num_perms) return shapley_permutation(val, *num_perms, seed);
  if (val.d() <= kMaxExactShapleyDimension) return shapley_exact(val);
  return shapley_permutation(val, 1000, seed);
}

ShapleyReport mmd_shapley_knn(const SampleSet& sample, const KernelSpec& spec,
                              const EstimatorConfig& cfg, std::optional<std::size_t> num_perms) {
  sample.validate();
  const KernelSpec kernel = resolve_bandwidths(spec, sample.outputs);
  auto g = std::make_shared<GramMatrix>(gram(kernel, sample.outputs));
  const double total = mmd_total(*g);
  auto x = std::make_shared<InputMatrix>(sample.inputs);
  const ValueFunction val = ValueFunction::complementary(
      sample.d(), [g, x, cfg](Subset a) { return knn_complementary_value(*g, *x, a, cfg); },
      total);
  return shapley(val, num_perms, cfg.seed);
}

ShapleyReport mmd_shapley_double_loop(const Model& model, const InputSampler& sampler,
                                      const KernelSpec& spec, const EstimatorConfig& cfg,
                                      std::optional<std::size_t> num_perms) {
  const int d = sampler.dim();
  const double full = double_loop_mmd(model, sampler, Subset::full(d), spec, cfg).closed;
  const ValueFunction val(
      ValueKind::MmdClosed, d,
      [&model, &sampler, &spec, cfg, d, full](Subset a) {
        if (a == Subset::full(d)) return full;
        return double_loop_mmd(model, sampler, a, spec, cfg).closed;
      },
      full);
  return shapley(val, num_perms, cfg.seed);
}

ShapleyReport variance_shapley(const SampleSet& sample, const EstimatorConfig& cfg,
                               std::optional<std::size_t> num_perms) {
  ShapleyReport report = mmd_shapley_knn(sample, KernelSpec::linear(), cfg, num_perms);
  report.kind = ValueKind::VarianceClosed;
  return report;
}

double hsic_permutation_pvalue(const HsicGrams& grams, HsicFlavor flavor, std::size_t num_perms,
                               std::uint64_t seed) {
  const auto n = grams.output.rows();
  Eigen::ArrayXXd w = Eigen::ArrayXXd::Ones(n, n);
  for (const auto& k : grams.inputs) w *= 1.0 + k.array();
  w -= 1.0;
  if (flavor == HsicFlavor::U) w.matrix().diagonal().setZero();
  auto statistic = [&](const std::vector<Eigen::Index>& perm) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) s += w(i, j) * grams.output(perm[i], perm[j]);
    }
    return s;
  };
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const double observed = statistic(perm);
  Rng rng = Rng(seed).substream({stream_tag::kNull});
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < num_perms; ++p) {
    rng.shuffle(std::span<Eigen::Index>(perm));
    if (statistic(perm) >= observed) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + num_perms);
}

ShapleyReport hsic_shapley(const SampleSet& sample, const KernelSpec& input_spec,
                           const KernelSpec& output_spec, const EstimatorConfig& cfg,
                           HsicFlavor flavor, const std::vector<MarginalDist>& marginals,
                           std::optional<std::size_t> num_perms) {
  const KernelSpec out_kernel = resolve_bandwidths(output_spec, sample.outputs);
  const HsicGrams grams = hsic_grams(sample, input_spec, out_kernel, marginals);
  const ClosedValueTable table = hsic_table(grams, flavor);
  const bool degenerate = hsic_permutation_pvalue(grams, flavor, 99, cfg.seed) > 0.05;
  ShapleyReport report;
  if (table.total() > 0.0) {
    report = shapley(ValueFunction::from_table(ValueKind::HsicClosed, table), num_perms, cfg.seed);
  } else {
    report.kind = ValueKind::HsicClosed;
    report.normalizer = table.total();
    report.effects.assign(static_cast<std::size_t>(sample.d()),
                          std::numeric_limits<double>::quiet_NaN());
  }
  report.degenerate_normalizer = degenerate || !(table.total() > 0.0);
  return report;
}

}  // namespace kgsa
