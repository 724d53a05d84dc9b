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

#include "kgsa/experiments.hpp"

#include <algorithm>

#include "kgsa/error.hpp"
#include "kgsa/parallel.hpp"

namespace kgsa {

namespace {

// Independent seeds for the parts of one replicate.
enum class Part : std::uint64_t { Design = 1, Sample, Model, Knn, DoubleLoop, Sobol, Kernel };

std::uint64_t part_seed(std::uint64_t seed, Part part) {
  Rng rng = Rng(seed).substream({stream_tag::kReplicate, static_cast<std::uint64_t>(part)});
  return rng();
}

SampleSet draw_sample(const Model& model, const InputSampler& sampler, std::size_t n,
                      std::uint64_t seed) {
  Rng rng = Rng(part_seed(seed, Part::Sample)).substream({stream_tag::kSampling});
  SampleSet s;
  s.inputs = sampler.sample(n, rng);
  s.outputs = model.evaluate_rows(s.inputs, Rng(part_seed(seed, Part::Model)));
  return s;
}

KernelSpec sobolev_product(const std::vector<MarginalDist>& marginals) {
  std::vector<KernelSpec> factors;
  factors.reserve(marginals.size());
  for (const auto& m : marginals) factors.push_back(KernelSpec::sobolev(1, m));
  return KernelSpec::product_zero_mean(std::move(factors));
}

std::vector<double> hsic_first_order(const HsicGrams& grams, HsicFlavor flavor) {
  const int d = static_cast<int>(grams.inputs.size());
  const double total = hsic_stat(grams, Subset::full(d), flavor);
  require(total > 0.0, ErrorCode::DegenerateOutput,
          "HSIC(X, Y) is not positive; first-order indices are undefined");
  std::vector<double> out(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) out[l] = hsic_stat(grams, Subset::singleton(l), flavor) / total;
  return out;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r) {
  return mix64(mix64(seed) ^ (static_cast<std::uint64_t>(r) + 0x9e3779b97f4a7c15ULL));
}

int argmax(const std::vector<double>& values) {
  require(!values.empty(), ErrorCode::Domain, "argmax of an empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

// ---------------------------------------------------------------------------

IshigamiPickFreeze ishigami_pick_freeze(std::size_t n, std::uint64_t seed,
                                        const KernelSpec& output_kernel) {
  const Model model = ishigami_model(true);
  const PickFreezeDesign design =
      pick_freeze_design(ishigami_sampler(true), n, part_seed(seed, Part::Design));
  const PickFreezeOutputs out = evaluate_design(model, design, part_seed(seed, Part::Model));
  const KernelSpec kernel = resolve_bandwidths(output_kernel, out.y);
  IshigamiPickFreeze r;
  for (int l = 0; l < 4; ++l) {
    const PickFreezeSobol s = saltelli_sobol(out, l);
    r.sobol_first.push_back(s.v_l / s.v);
    r.sobol_total.push_back(1.0 - s.v_minus_l / s.v);
    const PickFreezeMmd m = pick_freeze_mmd(out, l, kernel);
    r.mmd_first.push_back(m.m_l / m.m_tot);
    r.mmd_total.push_back(1.0 - m.m_minus_l / m.m_tot);
  }
  r.evaluations = model.evaluations();
  return r;
}

std::vector<double> ishigami_hsic_first(std::size_t n, std::uint64_t seed, HsicFlavor flavor) {
  const InputSampler sampler = ishigami_sampler(true);
  const SampleSet sample = draw_sample(ishigami_model(true), sampler, n, seed);
  const HsicGrams grams = hsic_grams(sample, sobolev_product(sampler.marginals()),
                                     KernelSpec::gaussian_median(), sampler.marginals());
  return hsic_first_order(grams, flavor);
}

MmdEstimatorComparison ishigami_mmd_estimators(const EstimatorConfig& cfg, std::size_t n_dl,
                                               std::size_t m_dl) {
  cfg.validate();
  const Model model = ishigami_model(true);
  const InputSampler sampler = ishigami_sampler(true);
  const SampleSet sample = draw_sample(model, sampler, cfg.n, cfg.seed);
  const GramMatrix g = resolve_and_gram(KernelSpec::gaussian_median(), sample.outputs);
  const double total = mmd_total(g);
  EstimatorConfig knn_cfg = cfg;
  knn_cfg.seed = part_seed(cfg.seed, Part::Knn);
  EstimatorConfig dl_cfg = cfg;
  dl_cfg.n = n_dl;
  dl_cfg.m = m_dl;
  dl_cfg.n_a = 0;
  dl_cfg.seed = part_seed(cfg.seed, Part::DoubleLoop);
  MmdEstimatorComparison r;
  for (int l = 0; l < sample.d(); ++l) {
    const std::vector<double> col = sample.column(l);
    r.rank.push_back(rank_mmd(g, col) / total);
    r.knn.push_back(knn_closed_value(g, sample.inputs, Subset::singleton(l), knn_cfg) / total);
    const DoubleLoopEstimate dl =
        double_loop_mmd(model, sampler, Subset::singleton(l), KernelSpec::gaussian_median(),
                        dl_cfg);
    r.double_loop.push_back(dl.closed / dl.total);
  }
  return r;
}

// ---------------------------------------------------------------------------

KernelSpec stochastic_default_kernel() {
  return parse_kernel_spec("distribution:sigma2=1,lambda=median,inner=(gaussian:sigma=median)");
}

StochasticReplicate stochastic_replicate(std::size_t n_sobol, std::size_t n_kernel,
                                         int inner_sample, std::uint64_t seed,
                                         const KernelSpec& output_kernel) {
  const InputSampler sampler = stochastic_sampler();
  StochasticReplicate r;

  const Model mean_model = stochastic_mean_model(inner_sample);
  const std::uint64_t sobol_seed = part_seed(seed, Part::Sobol);
  const PickFreezeDesign design =
      pick_freeze_design(sampler, n_sobol, part_seed(sobol_seed, Part::Design));
  const PickFreezeOutputs pf = evaluate_design(mean_model, design, part_seed(sobol_seed, Part::Model));
  for (int l = 0; l < kStochasticInputs; ++l) {
    const PickFreezeSobol s = saltelli_sobol(pf, l);
    r.sobol_mean_first.push_back(s.v_l / s.v);
  }

  const Model model = stochastic_model(inner_sample);
  const SampleSet sample = draw_sample(model, sampler, n_kernel, part_seed(seed, Part::Kernel));
  GramMatrix g = resolve_and_gram(output_kernel, sample.outputs);
  const double total = mmd_total(g);
  for (int l = 0; l < kStochasticInputs; ++l) {
    const std::vector<double> col = sample.column(l);
    r.mmd_first.push_back(rank_mmd(g, col) / total);
  }
  const HsicGrams grams =
      hsic_grams(sample, sobolev_product(sampler.marginals()), std::move(g), sampler.marginals());
  r.hsic_first = hsic_first_order(grams, HsicFlavor::V);
  r.evaluations = mean_model.evaluations() + model.evaluations();
  return r;
}

// ---------------------------------------------------------------------------

KernelSpec sir_default_kernel() { return parse_kernel_spec("alignment:bandwidth=median"); }

KernelSpec sir_input_kernel() { return sobolev_product(sir_sampler().marginals()); }

SirReplicate sir_replicate(std::size_t n, std::uint64_t seed, const KernelSpec& output_kernel,
                           HsicFlavor flavor) {
  const InputSampler sampler = sir_sampler();
  Rng rng = Rng(part_seed(seed, Part::Sample)).substream({stream_tag::kSampling});
  SampleSet infected;
  infected.inputs = sampler.sample(n, rng);
  infected.input_names = sir_input_names();
  infected.outputs.resize(n);
  SampleSet reported = infected;
  parallel_for(n, [&](std::size_t i) {
    const SirCurves c = sir_resample(
        sir_simulate(SirParams::from_inputs(row_span(infected.inputs, static_cast<Eigen::Index>(i)))),
        kSirOutputStep);
    infected.outputs[i] = c.infected;
    reported.outputs[i] = c.reported;
  });
  const KernelSpec input_kernel = sir_input_kernel();
  SirReplicate r;
  r.hsic_infected = hsic_first_order(
      hsic_grams(infected, input_kernel, output_kernel, sampler.marginals()), flavor);
  r.hsic_reported = hsic_first_order(
      hsic_grams(reported, input_kernel, output_kernel, sampler.marginals()), flavor);
  r.evaluations = n;
  return r;
}

// ---------------------------------------------------------------------------

CategoricalReplicate categorical_replicate(const CategoricalSynthetic& model,
                                           const EstimatorConfig& cfg) {
  cfg.validate();
  const Model m = model.model();
  const InputSampler sampler = model.sampler();
  const SampleSet sample = draw_sample(m, sampler, cfg.n, cfg.seed);
  const KernelSpec out = KernelSpec::dirac(model.num_levels());
  EstimatorConfig knn_cfg = cfg;
  knn_cfg.seed = part_seed(cfg.seed, Part::Knn);
  CategoricalReplicate r;
  r.mmd_shapley = mmd_shapley_knn(sample, out, knn_cfg).effects;
  const ShapleyReport h = hsic_shapley(sample, sobolev_product(sampler.marginals()), out, cfg,
                                       HsicFlavor::V, sampler.marginals());
  r.hsic_shapley = h.effects;
  r.hsic_degenerate = h.degenerate_normalizer;
  r.evaluations = m.evaluations();
  return r;
}

}  // namespace kgsa
