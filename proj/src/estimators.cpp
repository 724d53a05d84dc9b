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

#include "kgsa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgsa/error.hpp"
#include "kgsa/parallel.hpp"

namespace kgsa {

namespace {

double gram_mean(const GramMatrix& g) {
  return g.sum() / (static_cast<double>(g.rows()) * static_cast<double>(g.cols()));
}

// Input columns divided by their standard deviation (constant columns zeroed).
InputMatrix standardized(const InputMatrix& x) {
  InputMatrix z = x;
  const auto n = static_cast<double>(x.rows());
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    const double mean = x.col(l).sum() / n;
    const double var = (x.col(l).array() - mean).square().sum() / n;
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    z.col(l) = (x.col(l).array() - mean) * scale;
  }
  return z;
}

std::vector<std::size_t> neighbors_standardized(const InputMatrix& z,
                                                const std::vector<int>& cols, std::size_t anchor,
                                                std::size_t k) {
  const auto n = static_cast<std::size_t>(z.rows());
  k = std::min(k, n);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (int l : cols) {
      const double diff = z(j, l) - z(anchor, l);
      s += diff * diff;
    }
    dist[j] = {j == anchor ? -1.0 : s, j};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::vector<MarginalDist> factor_marginals(const ProductZeroMeanKernel& product,
                                           const std::vector<MarginalDist>& marginals) {
  if (!marginals.empty()) {
    require(marginals.size() == product.factors.size(), ErrorCode::Domain,
            "one marginal per product-kernel factor is required");
    return marginals;
  }
  std::vector<MarginalDist> out;
  for (const auto& f : product.factors) {
    auto m = natural_marginal(f);
    require(m.has_value(), ErrorCode::AssumptionViolated,
            "cannot verify the zero-mean input kernel assumption for factor '" + f.describe() +
                "' without its input marginal");
    out.push_back(*m);
  }
  return out;
}

const ProductZeroMeanKernel& as_product(const KernelSpec& spec) {
  const auto* p = spec.get_if<ProductZeroMeanKernel>();
  require(p != nullptr, ErrorCode::VariantMismatch,
          "HSIC input kernel must be a product of zero-mean kernels, got '" +
              std::string(spec.kind_name()) + "'");
  return *p;
}

}  // namespace

std::size_t EstimatorConfig::anchors(std::size_t sample_size) const {
  return n_a == 0 ? std::min<std::size_t>(sample_size, 500) : n_a;
}

void EstimatorConfig::validate() const {
  require(n >= 1 && m >= 1, ErrorCode::Domain, "sample sizes must be positive");
  require(n_i >= 2, ErrorCode::Domain, "n_I must be at least 2");
  require(n_a <= n, ErrorCode::Domain, "n_A cannot exceed n");
}

// ---------------------------------------------------------------------------
// Double loop

DoubleLoopEstimate double_loop_mmd(const Model& model, const InputSampler& sampler, Subset a,
                                   const KernelSpec& spec, const EstimatorConfig& cfg) {
  cfg.validate();
  require(model.arity() == sampler.dim(), ErrorCode::Domain, "model and sampler dimensions differ");
  if (a.is_empty()) return {};
  require(sampler.independent_inputs() || sampler.supports_conditional(), ErrorCode::Capability,
          "sampler cannot draw conditional inputs for the double loop");
  const Rng root = Rng(cfg.seed).substream({stream_tag::kDoubleLoop});
  Rng marginal_rng = root.substream({0});
  const InputMatrix x = sampler.sample(cfg.m, marginal_rng);
  const std::vector<OutputValue> y = model.evaluate_rows(x, root.substream({1}));
  const KernelSpec kernel = resolve_bandwidths(spec, y);
  const GramMatrix g = gram(kernel, y);
  const double pp = gram_mean(g);
  const double total = g.diagonal().mean() - pp;

  std::vector<double> terms(cfg.n);
  parallel_for(cfg.n, [&](std::size_t i) {
    Rng outer = root.substream({2, a.bits, i});
    const InputMatrix anchor = sampler.sample(1, outer);
    const InputMatrix inner = sampler.conditional_sample(a, row_span(anchor, 0), cfg.m, outer);
    std::vector<OutputValue> y_tilde(cfg.m);
    const Rng model_stream = root.substream({3, a.bits, i});
    for (std::size_t j = 0; j < cfg.m; ++j) {
      Rng rng = model_stream.substream({stream_tag::kModel, j});
      y_tilde[j] = model(row_span(inner, static_cast<Eigen::Index>(j)), rng);
    }
    terms[i] = pp + gram_mean(gram(kernel, y_tilde)) - 2.0 * gram_mean(cross_gram(kernel, y, y_tilde));
  });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return {sum / static_cast<double>(cfg.n), total};
}

// ---------------------------------------------------------------------------
// Pick-freeze

PickFreezeDesign pick_freeze_design(const InputSampler& sampler, std::size_t n,
                                    std::uint64_t seed) {
  require(sampler.independent_inputs(), ErrorCode::Capability,
          "pick-freeze designs need independent inputs");
  require(n >= 1, ErrorCode::Domain, "pick-freeze design needs n >= 1");
  Rng rng = Rng(seed).substream({stream_tag::kPickFreeze});
  PickFreezeDesign design;
  design.x = sampler.sample(n, rng);
  design.x_prime = sampler.sample(n, rng);
  for (int l = 0; l < sampler.dim(); ++l) {
    InputMatrix tilde = design.x_prime;
    tilde.col(l) = design.x.col(l);
    design.x_tilde.push_back(std::move(tilde));
  }
  return design;
}

PickFreezeOutputs evaluate_design(const Model& model, const PickFreezeDesign& design,
                                  std::uint64_t seed) {
  const Rng root = Rng(seed).substream({stream_tag::kModel});
  PickFreezeOutputs out;
  out.y = model.evaluate_rows(design.x, root.substream({0}));
  out.y_prime = model.evaluate_rows(design.x_prime, root.substream({1}));
  for (std::size_t l = 0; l < design.x_tilde.size(); ++l) {
    out.y_tilde.push_back(model.evaluate_rows(design.x_tilde[l], root.substream({2 + l})));
  }
  return out;
}

PickFreezeSobol saltelli_sobol(const PickFreezeOutputs& outputs, int l) {
  require(l >= 0 && static_cast<std::size_t>(l) < outputs.y_tilde.size(), ErrorCode::Domain,
          "input index out of range");
  const std::vector<double> y = to_scalars(outputs.y);
  const std::vector<double> yp = to_scalars(outputs.y_prime);
  const std::vector<double> yt = to_scalars(outputs.y_tilde[l]);
  const auto n = static_cast<double>(y.size());
  PickFreezeSobol r;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    r.v_l += y[i] * (yt[i] - yp[i]);
    r.v_minus_l += yp[i] * (yt[i] - y[i]);
    sum += y[i];
    sum_sq += y[i] * y[i];
  }
  r.v_l /= n;
  r.v_minus_l /= n;
  r.v = sum_sq / n - (sum / n) * (sum / n);
  return r;
}

double mmd_total(const GramMatrix& g) { return g.diagonal().mean() - gram_mean(g); }

PickFreezeMmd pick_freeze_mmd(const PickFreezeOutputs& outputs, int l, const KernelSpec& spec) {
  require(l >= 0 && static_cast<std::size_t>(l) < outputs.y_tilde.size(), ErrorCode::Domain,
          "input index out of range");
  const auto& y = outputs.y;
  const auto& yp = outputs.y_prime;
  const auto& yt = outputs.y_tilde[l];
  PickFreezeMmd r;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double base = eval_kernel(spec, y[i], yp[i]);
    r.m_l += eval_kernel(spec, y[i], yt[i]) - base;
    r.m_minus_l += eval_kernel(spec, yp[i], yt[i]) - base;
  }
  const auto n = static_cast<double>(y.size());
  r.m_l /= n;
  r.m_minus_l /= n;
  r.m_tot = mmd_total(gram(spec, y));
  return r;
}

// ---------------------------------------------------------------------------
// Ranks and neighbours

std::vector<std::size_t> rank_permutation(std::span<const double> values) {
  const std::size_t n = values.size();
  require(n >= 2, ErrorCode::Domain, "rank permutation needs at least two values");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> next(n);
  for (std::size_t r = 0; r < n; ++r) next[order[r]] = order[(r + 1) % n];
  return next;
}

double rank_mmd(const GramMatrix& g, std::span<const double> column) {
  require(static_cast<std::size_t>(g.rows()) == column.size(), ErrorCode::Domain,
          "Gram size and column length differ");
  const std::vector<std::size_t> next = rank_permutation(column);
  double s = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    s += g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(next[i]));
  }
  return s / static_cast<double>(next.size()) - gram_mean(g);
}

double rank_mmd(const SampleSet& sample, int l, const KernelSpec& spec) {
  sample.validate();
  const std::vector<double> col = sample.column(l);
  return rank_mmd(gram(spec, sample.outputs), col);
}

std::vector<std::size_t> nearest_neighbors(const InputMatrix& x, Subset a, std::size_t anchor,
                                           std::size_t k) {
  require(anchor < static_cast<std::size_t>(x.rows()), ErrorCode::Domain, "anchor out of range");
  return neighbors_standardized(standardized(x), a.indices(), anchor, k);
}

std::vector<std::size_t> knn_anchors(std::size_t n, const EstimatorConfig& cfg) {
  Rng rng = Rng(cfg.seed).substream({stream_tag::kKnn});
  std::vector<std::size_t> s(cfg.anchors(n));
  for (auto& v : s) v = static_cast<std::size_t>(rng.index(n));
  return s;
}

double knn_closed_value(const GramMatrix& g, const InputMatrix& x, Subset a,
                        const EstimatorConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(static_cast<std::size_t>(g.rows()) == n, ErrorCode::Domain,
          "Gram size and sample size differ");
  require(n >= 2, ErrorCode::Domain, "kNN estimator needs at least two points");
  require(cfg.anchors(n) <= n, ErrorCode::Domain, "n_A cannot exceed n");
  if (a.is_empty()) return 0.0;
  const InputMatrix z = standardized(x);
  const std::vector<int> cols = a.indices();
  const std::vector<std::size_t> s = knn_anchors(n, cfg);
  std::vector<double> terms(s.size());
  parallel_for(s.size(), [&](std::size_t j) {
    const auto nn = neighbors_standardized(z, cols, s[j], 2);
    terms[j] = g(static_cast<Eigen::Index>(nn[0]), static_cast<Eigen::Index>(nn[1]));
  });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(s.size()) - gram_mean(g);
}

double knn_closed_value(const SampleSet& sample, Subset a, const KernelSpec& spec,
                        const EstimatorConfig& cfg) {
  sample.validate();
  return knn_closed_value(gram(spec, sample.outputs), sample.inputs, a, cfg);
}

double knn_complementary_value(const GramMatrix& g, const InputMatrix& x, Subset a,
                               const EstimatorConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(static_cast<std::size_t>(g.rows()) == n, ErrorCode::Domain,
          "Gram size and sample size differ");
  require(cfg.n_i >= 2 && cfg.n_i <= n, ErrorCode::Domain, "n_I must lie in [2, n]");
  const Subset rest = a.complement(static_cast<int>(x.cols()));
  if (rest.is_empty()) return mmd_total(g);
  const InputMatrix z = standardized(x);
  const std::vector<int> cols = rest.indices();
  const std::vector<std::size_t> s = knn_anchors(n, cfg);
  const auto ni = static_cast<double>(cfg.n_i);
  std::vector<double> terms(s.size());
  parallel_for(s.size(), [&](std::size_t j) {
    const auto nn = neighbors_standardized(z, cols, s[j], cfg.n_i);
    double diag = 0.0;
    double all = 0.0;
    for (std::size_t p : nn) {
      diag += g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
      for (std::size_t q : nn) all += g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
    terms[j] = diag / ni - all / (ni * ni);
  });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(s.size());
}

double knn_complementary_value(const SampleSet& sample, Subset a, const KernelSpec& spec,
                               const EstimatorConfig& cfg) {
  sample.validate();
  return knn_complementary_value(gram(spec, sample.outputs), sample.inputs, a, cfg);
}

// ---------------------------------------------------------------------------
// HSIC

std::optional<MarginalDist> natural_marginal(const KernelSpec& factor) {
  if (const auto* s = factor.get_if<SobolevKernel>()) {
    return s->marginal ? *s->marginal : MarginalDist::uniform(0.0, 1.0);
  }
  if (const auto* d = factor.get_if<DurrandeKernel>()) return d->marginal;
  if (const auto* st = factor.get_if<SteinKernel>()) {
    const std::string& name = st->score.name;
    if (name.rfind("normal:", 0) == 0) return parse_marginal(name);
  }
  return std::nullopt;
}

void require_zero_mean_inputs(const KernelSpec& input_spec,
                              const std::vector<MarginalDist>& marginals, double tol,
                              std::uint64_t seed) {
  const auto& product = as_product(input_spec);
  const std::vector<MarginalDist> laws = factor_marginals(product, marginals);
  constexpr int kDraws = 20000;
  for (std::size_t l = 0; l < product.factors.size(); ++l) {
    std::vector<double> probes;
    for (int q = 1; q <= 9; ++q) probes.push_back(laws[l].quantile(0.1 * q));
    const ZeroMeanCheck check =
        verify_zero_mean(product.factors[l], laws[l], probes, kDraws, seed + l);
    require(check.max_abs_mean <= tol, ErrorCode::AssumptionViolated,
            "input kernel '" + product.factors[l].describe() + "' is not zero-mean under " +
                laws[l].describe() + " (max |E k(x,X)| = " + std::to_string(check.max_abs_mean) +
                "); the HSIC-ANOVA decomposition requires zero-mean input kernels");
  }
}

HsicGrams hsic_grams(const SampleSet& sample, const KernelSpec& input_spec, GramMatrix output_gram,
                     const std::vector<MarginalDist>& marginals) {
  sample.validate();
  const auto& product = as_product(input_spec);
  require(static_cast<int>(product.factors.size()) == sample.d(), ErrorCode::Domain,
          "product kernel needs one factor per input column");
  require(output_gram.rows() == static_cast<Eigen::Index>(sample.n()) &&
              output_gram.cols() == output_gram.rows(),
          ErrorCode::Domain, "output Gram size does not match the sample");
  require_zero_mean_inputs(input_spec, marginals);
  HsicGrams grams;
  for (int l = 0; l < sample.d(); ++l) {
    const std::vector<double> col = sample.column(l);
    grams.inputs.push_back(gram(product.factors[l], std::span<const double>(col)));
  }
  grams.output = std::move(output_gram);
  return grams;
}

HsicGrams hsic_grams(const SampleSet& sample, const KernelSpec& input_spec,
                     const KernelSpec& output_spec, const std::vector<MarginalDist>& marginals) {
  sample.validate();
  return hsic_grams(sample, input_spec, resolve_and_gram(output_spec, sample.outputs), marginals);
}

namespace {

double hsic_reduce(const Eigen::ArrayXXd& weights, const GramMatrix& output, HsicFlavor flavor) {
  const auto n = static_cast<double>(output.rows());
  const Eigen::ArrayXXd prod = weights * output.array();
  if (flavor == HsicFlavor::V) return prod.sum() / (n * n);
  require(output.rows() >= 2, ErrorCode::Domain, "U-statistic needs at least two points");
  return (prod.sum() - prod.matrix().diagonal().sum()) / (n * (n - 1.0));
}

void check_subset(const HsicGrams& grams, Subset a) {
  require(a.bits < (1u << grams.inputs.size()), ErrorCode::Domain,
          "subset exceeds the number of inputs");
}

}  // namespace

double hsic_stat(const HsicGrams& grams, Subset a, HsicFlavor flavor) {
  check_subset(grams, a);
  if (a.is_empty()) return 0.0;
  const auto n = grams.output.rows();
  Eigen::ArrayXXd k = Eigen::ArrayXXd::Ones(n, n);
  for (int l : a.indices()) k *= 1.0 + grams.inputs[l].array();
  return hsic_reduce(k - 1.0, grams.output, flavor);
}

double hsic_stat(const SampleSet& sample, Subset a, const KernelSpec& input_spec,
                 const KernelSpec& output_spec, HsicFlavor flavor,
                 const std::vector<MarginalDist>& marginals) {
  return hsic_stat(hsic_grams(sample, input_spec, output_spec, marginals), a, flavor);
}

double hsic_pure_stat(const HsicGrams& grams, Subset a, HsicFlavor flavor) {
  check_subset(grams, a);
  if (a.is_empty()) return 0.0;
  const auto n = grams.output.rows();
  Eigen::ArrayXXd k = Eigen::ArrayXXd::Ones(n, n);
  for (int l : a.indices()) k *= grams.inputs[l].array();
  return hsic_reduce(k, grams.output, flavor);
}

ClosedValueTable hsic_table(const HsicGrams& grams, HsicFlavor flavor) {
  const int d = static_cast<int>(grams.inputs.size());
  const Subset full = Subset::full(d);
  ClosedValueTable table(d, 0.0);
  for (std::uint32_t bits = 1; bits <= full.bits; ++bits) {
    table.set(Subset{bits}, hsic_stat(grams, Subset{bits}, flavor));
  }
  table.set_total(table.at(full));
  return table;
}

}  // namespace kgsa
