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

#include "kgsa/cli/run.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "kgsa/cli/csv.hpp"
#include "kgsa/experiments.hpp"

namespace kgsa::cli {

using nlohmann::json;

namespace {

struct Problem {
  std::optional<Model> model;
  std::optional<InputSampler> sampler;
  std::optional<SampleSet> data;
  std::vector<std::string> names;
  OutputKind kind = OutputKind::Scalar;
  int levels = 0;
  std::vector<MarginalDist> marginals;
};

std::vector<std::string> default_names(int d) {
  std::vector<std::string> names;
  for (int l = 0; l < d; ++l) names.push_back("x" + std::to_string(l + 1));
  return names;
}

Problem named_problem(const RunConfig& cfg) {
  Problem p;
  const std::string& name = cfg.model;
  if (name == "ishigami" || name == "ishigami3") {
    const bool dummy = name == "ishigami";
    p.model = ishigami_model(dummy);
    p.sampler = ishigami_sampler(dummy);
  } else if (name == "stochastic") {
    p.model = stochastic_model(cfg.inner);
    p.sampler = stochastic_sampler();
    p.kind = OutputKind::DistSample;
  } else if (name == "stochastic-mean") {
    p.model = stochastic_mean_model(cfg.inner);
    p.sampler = stochastic_sampler();
  } else if (name == "sir-infected" || name == "sir-reported") {
    p.model = sir_model(name == "sir-infected" ? SirCompartment::Infected : SirCompartment::Reported);
    p.sampler = sir_sampler();
    p.kind = OutputKind::Curve;
    p.names = sir_input_names();
  } else if (name == "categorical") {
    const CategoricalSynthetic m = CategoricalSynthetic::standard();
    p.model = m.model();
    p.sampler = m.sampler();
    p.kind = OutputKind::Categorical;
    p.levels = m.num_levels();
  } else {
    raise(ErrorCode::Domain, "unknown model '" + name + "'");
  }
  if (p.names.empty()) p.names = default_names(p.sampler->dim());
  p.marginals = p.sampler->marginals();
  return p;
}

Problem data_problem(const RunConfig& cfg) {
  CsvSchema schema;
  schema.input_columns = cfg.input_columns;
  schema.output_column = cfg.output_column;
  schema.output_kind = parse_output_kind(cfg.output_kind);
  Problem p;
  p.data = read_sample_csv(cfg.data, schema);
  p.kind = schema.output_kind;
  p.names = p.data->input_names;
  for (int l = 0; l < p.data->d(); ++l) p.marginals.push_back(MarginalDist::empirical(p.data->column(l)));
  if (p.kind == OutputKind::Categorical) {
    for (const auto& y : p.data->outputs) p.levels = std::max(p.levels, std::get<Categorical>(y).level + 1);
  }
  return p;
}

KernelSpec output_kernel(const RunConfig& cfg, const Problem& p) {
  if (!cfg.kernel_out.empty()) return parse_kernel_spec(cfg.kernel_out);
  switch (p.kind) {
    case OutputKind::Scalar:
      return KernelSpec::gaussian_median();
    case OutputKind::Categorical:
      return KernelSpec::dirac(std::max(p.levels, 1));
    case OutputKind::DistSample:
      return stochastic_default_kernel();
    case OutputKind::Curve:
      return sir_default_kernel();
  }
  return KernelSpec::gaussian_median();
}

// One factor is repeated for every input; a product must list d factors.
KernelSpec input_kernel(const RunConfig& cfg, const Problem& p) {
  const auto d = p.marginals.size();
  if (cfg.kernel_in.empty()) {
    std::vector<KernelSpec> factors;
    for (const auto& m : p.marginals) factors.push_back(KernelSpec::sobolev(1, m));
    return KernelSpec::product_zero_mean(std::move(factors));
  }
  KernelSpec spec = parse_kernel_spec(cfg.kernel_in);
  if (const auto* prod = spec.get_if<ProductZeroMeanKernel>()) {
    require(prod->factors.size() == d, ErrorCode::Domain,
            "input kernel has " + std::to_string(prod->factors.size()) + " factors for " +
                std::to_string(d) + " inputs");
    return spec;
  }
  return KernelSpec::product_zero_mean(std::vector<KernelSpec>(d, spec));
}

SampleSet replicate_sample(const Problem& p, const RunConfig& cfg, std::uint64_t seed) {
  if (p.data) {
    if (cfg.reps == 1) return *p.data;
    // Bootstrap resample of the given rows for each replicate.
    Rng rng = Rng(seed).substream({stream_tag::kSampling});
    SampleSet s = *p.data;
    const std::size_t n = p.data->n();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.index(n);
      s.inputs.row(static_cast<Eigen::Index>(i)) = p.data->inputs.row(static_cast<Eigen::Index>(k));
      s.outputs[i] = p.data->outputs[k];
    }
    return s;
  }
  Rng rng = Rng(seed).substream({stream_tag::kSampling});
  SampleSet s;
  s.inputs = p.sampler->sample(cfg.est.n, rng);
  s.outputs = p.model->evaluate_rows(s.inputs, Rng(seed).substream({stream_tag::kModel}));
  s.input_names = p.names;
  return s;
}

void require_model(const Problem& p, const std::string& estimator) {
  require(p.model.has_value(), ErrorCode::Capability,
          "estimator '" + estimator + "' needs a model to call; it cannot run on --data");
}

std::optional<HsicFlavor> hsic_flavor(const std::string& estimator) {
  if (estimator == "hsic-u") return HsicFlavor::U;
  if (estimator == "hsic-v") return HsicFlavor::V;
  return std::nullopt;
}

std::vector<std::string> prefixed(const std::string& prefix, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back(prefix + n);
  return out;
}

json negative_subsets_json(const IndexReport& rep) {
  json out = json::array();
  for (Subset s : rep.negative_subsets) out.push_back(s.label());
  return out;
}

void run_estimate(const RunConfig& cfg, const Problem& p, RunResult& result) {
  const std::string est = cfg.estimator.empty() ? "knn" : cfg.estimator;
  const int d = static_cast<int>(p.names.size());
  const bool first_only = est == "rank";
  ReplicateTable table{"indices", prefixed("S_", p.names), {}};
  if (!first_only) {
    for (const auto& c : prefixed("ST_", p.names)) table.columns.push_back(c);
  }
  const KernelSpec kernel = output_kernel(cfg, p);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    const std::uint64_t seed = replicate_seed(cfg.est.seed, r);
    EstimatorConfig ecfg = cfg.est;
    ecfg.seed = seed;
    IndexReport rep;
    json extra = json::object();
    if (est == "pick-freeze") {
      require_model(p, est);
      const PickFreezeDesign design = pick_freeze_design(*p.sampler, cfg.est.n, seed);
      const PickFreezeOutputs out =
          evaluate_design(*p.model, design, Rng(seed).substream({stream_tag::kModel})());
      const KernelSpec resolved = resolve_bandwidths(kernel, out.y);
      std::vector<double> single, comp;
      double total = 0.0;
      for (int l = 0; l < d; ++l) {
        const PickFreezeMmd m = pick_freeze_mmd(out, l, resolved);
        single.push_back(m.m_l);
        comp.push_back(m.m_minus_l);
        total = m.m_tot;
      }
      rep = first_and_total(single, comp, total);
    } else if (est == "double-loop") {
      require_model(p, est);
      std::vector<double> single, comp;
      double total_sum = 0.0;
      int total_count = 0;
      for (int l = 0; l < d; ++l) {
        for (const Subset a : {Subset::singleton(l), Subset::singleton(l).complement(d)}) {
          EstimatorConfig c = ecfg;
          c.seed = mix64(seed ^ (static_cast<std::uint64_t>(a.bits) << 1));
          const DoubleLoopEstimate e =
              a.is_empty() ? DoubleLoopEstimate{} : double_loop_mmd(*p.model, *p.sampler, a, kernel, c);
          (a.contains(l) && a.size() == 1 ? single : comp).push_back(e.closed);
          if (!a.is_empty()) {
            total_sum += e.total;
            ++total_count;
          }
        }
      }
      rep = first_and_total(single, comp, total_sum / total_count);
    } else if (est == "rank" || est == "knn") {
      const SampleSet sample = replicate_sample(p, cfg, seed);
      const GramMatrix g = resolve_and_gram(kernel, sample.outputs);
      const double total = mmd_total(g);
      require(total > 0.0, ErrorCode::DegenerateOutput,
              "the output has zero kernel spread; indices are undefined");
      std::vector<double> single, comp;
      for (int l = 0; l < d; ++l) {
        if (est == "rank") {
          single.push_back(rank_mmd(g, sample.column(l)));
        } else {
          single.push_back(knn_closed_value(g, sample.inputs, Subset::singleton(l), ecfg));
          const Subset c = Subset::singleton(l).complement(d);
          comp.push_back(c.is_empty() ? 0.0 : knn_closed_value(g, sample.inputs, c, ecfg));
        }
      }
      if (est == "rank") {
        rep.d = d;
        rep.total = total;
        for (double v : single) {
          rep.first_order.push_back(v / total);
          rep.negative_terms = rep.negative_terms || v < 0.0;
        }
      } else {
        rep = first_and_total(single, comp, total);
      }
    } else if (const auto flavor = hsic_flavor(est)) {
      const SampleSet sample = replicate_sample(p, cfg, seed);
      const HsicGrams grams = hsic_grams(sample, input_kernel(cfg, p), kernel, p.marginals);
      const ClosedValueTable t = hsic_table(grams, *flavor);
      require(t.total() > 0.0, ErrorCode::DegenerateOutput,
              "HSIC(X, Y) is not positive; normalized indices are undefined");
      rep = normalize(t);
      json pure = json::object();
      for (std::uint32_t bits = 1; bits < rep.normalized.size(); ++bits) {
        pure[Subset{bits}.label()] = rep.normalized[bits];
      }
      extra["pure_terms"] = std::move(pure);
    } else {
      raise(ErrorCode::Domain, "unknown estimator '" + est +
                                   "' (expected pick-freeze, double-loop, rank, knn, hsic-u, hsic-v)");
    }
    std::vector<double> row = rep.first_order;
    if (!first_only) row.insert(row.end(), rep.total_index.begin(), rep.total_index.end());
    table.rows.push_back(std::move(row));
    extra["estimator"] = est;
    extra["negative_terms"] = rep.negative_terms;
    extra["negative_subsets"] = negative_subsets_json(rep);
    extra["normalizer"] = rep.total;
    result.replicate_extras.push_back(std::move(extra));
  }
  result.tables.push_back(std::move(table));
}

void run_shapley(const RunConfig& cfg, const Problem& p, RunResult& result) {
  const std::string est = cfg.estimator.empty() ? "knn" : cfg.estimator;
  ReplicateTable table{"shapley", prefixed("Sh_", p.names), {}};
  const KernelSpec kernel = output_kernel(cfg, p);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    const std::uint64_t seed = replicate_seed(cfg.est.seed, r);
    EstimatorConfig ecfg = cfg.est;
    ecfg.seed = seed;
    ShapleyReport rep;
    if (est == "knn") {
      rep = mmd_shapley_knn(replicate_sample(p, cfg, seed), kernel, ecfg, cfg.perms);
    } else if (est == "double-loop") {
      require_model(p, est);
      rep = mmd_shapley_double_loop(*p.model, *p.sampler, kernel, ecfg, cfg.perms);
    } else if (const auto flavor = hsic_flavor(est)) {
      rep = hsic_shapley(replicate_sample(p, cfg, seed), input_kernel(cfg, p), kernel, ecfg, *flavor,
                         p.marginals, cfg.perms);
    } else {
      raise(ErrorCode::Domain,
            "unknown Shapley estimator '" + est + "' (expected knn, double-loop, hsic-u, hsic-v)");
    }
    const bool finite = std::all_of(rep.effects.begin(), rep.effects.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite || !(rep.normalizer > 0.0)) result.degenerate = true;
    table.rows.push_back(rep.effects);
    result.replicate_extras.push_back(
        {{"estimator", est},
         {"method", rep.method == ShapleyMethod::ExactSubsets ? "exact" : "permutation"},
         {"num_perms", rep.num_perms},
         {"value_function", std::string(to_string(rep.kind))},
         {"normalizer", std::isfinite(rep.normalizer) ? json(rep.normalizer) : json(nullptr)},
         {"negative_effects", rep.negative_effects},
         {"degenerate_normalizer", rep.degenerate_normalizer}});
  }
  result.tables.push_back(std::move(table));
}

std::vector<std::string> numbered(const std::string& prefix, int d) {
  std::vector<std::string> out;
  for (int l = 1; l <= d; ++l) out.push_back(prefix + std::to_string(l));
  return out;
}

std::vector<std::string> suffixed(std::vector<std::string> names, const std::string& suffix) {
  for (auto& n : names) n += suffix;
  return names;
}

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

ReplicateTable sir_curves_table() {
  std::vector<double> mid;
  for (const auto& m : sir_sampler().marginals()) mid.push_back(m.mean());
  const SirCurves c = sir_simulate(SirParams::from_inputs(mid));
  ReplicateTable t{"sir_curves", {"time", "infected", "reported"}, {}};
  for (std::size_t k = 0; k < c.infected.times.size(); ++k) {
    t.rows.push_back({c.infected.times[k], c.infected.values[k], c.reported.values[k]});
  }
  return t;
}

void run_reproduce(const RunConfig& cfg, RunResult& result) {
  std::uint64_t evaluations = 0;
  const std::string& ex = cfg.experiment;
  if (ex == "ishigami") {
    const KernelSpec k = cfg.kernel_out.empty() ? KernelSpec::gaussian_median()
                                                : parse_kernel_spec(cfg.kernel_out);
    ReplicateTable sobol{"ishigami_sobol", numbered("S", 4), {}};
    for (const auto& c : numbered("ST", 4)) sobol.columns.push_back(c);
    ReplicateTable mmd{"ishigami_mmd", {}, {}};
    for (const auto& c : numbered("S", 4)) mmd.columns.push_back(c + "_MMD");
    for (const auto& c : numbered("ST", 4)) mmd.columns.push_back(c + "_MMD");
    ReplicateTable hsic{"ishigami_hsic", {}, {}};
    for (const auto& c : numbered("S", 4)) hsic.columns.push_back(c + "_HSIC");
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const std::uint64_t seed = replicate_seed(cfg.est.seed, r);
      const IshigamiPickFreeze pf = ishigami_pick_freeze(cfg.est.n, seed, k);
      sobol.rows.push_back(concat(pf.sobol_first, pf.sobol_total));
      mmd.rows.push_back(concat(pf.mmd_first, pf.mmd_total));
      hsic.rows.push_back(ishigami_hsic_first(cfg.est.n, seed));
      evaluations += pf.evaluations + cfg.est.n;
    }
    result.tables = {std::move(sobol), std::move(mmd), std::move(hsic)};
  } else if (ex == "stochastic") {
    const KernelSpec k =
        cfg.kernel_out.empty() ? stochastic_default_kernel() : parse_kernel_spec(cfg.kernel_out);
    ReplicateTable sobol{"stochastic_sobol", numbered("S", kStochasticInputs), {}};
    ReplicateTable mmd{"stochastic_mmd", suffixed(numbered("S", kStochasticInputs), "_MMD"), {}};
    ReplicateTable hsic{"stochastic_hsic", suffixed(numbered("S", kStochasticInputs), "_HSIC"), {}};
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const StochasticReplicate s = stochastic_replicate(
          cfg.est.n, cfg.n_kernel, cfg.inner, replicate_seed(cfg.est.seed, r), k);
      sobol.rows.push_back(s.sobol_mean_first);
      mmd.rows.push_back(s.mmd_first);
      hsic.rows.push_back(s.hsic_first);
      evaluations += s.evaluations;
    }
    result.tables = {std::move(sobol), std::move(mmd), std::move(hsic)};
  } else if (ex == "sir") {
    const KernelSpec k = cfg.kernel_out.empty() ? sir_default_kernel() : parse_kernel_spec(cfg.kernel_out);
    const auto names = sir_input_names();
    ReplicateTable inf{"sir_hsic_infected", prefixed("S_", names), {}};
    ReplicateTable rep{"sir_hsic_reported", prefixed("S_", names), {}};
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const SirReplicate s = sir_replicate(cfg.est.n, replicate_seed(cfg.est.seed, r), k);
      inf.rows.push_back(s.hsic_infected);
      rep.rows.push_back(s.hsic_reported);
      evaluations += s.evaluations;
    }
    result.tables = {std::move(inf), std::move(rep)};
    result.artifacts.push_back(sir_curves_table());
  } else if (ex == "categorical") {
    const CategoricalSynthetic model = CategoricalSynthetic::standard();
    ReplicateTable mmd{"categorical_mmd_shapley", numbered("Sh", 4), {}};
    ReplicateTable hsic{"categorical_hsic_shapley", numbered("Sh", 4), {}};
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      EstimatorConfig ecfg = cfg.est;
      ecfg.seed = replicate_seed(cfg.est.seed, r);
      const CategoricalReplicate c = categorical_replicate(model, ecfg);
      mmd.rows.push_back(c.mmd_shapley);
      hsic.rows.push_back(c.hsic_shapley);
      result.replicate_extras.push_back({{"hsic_degenerate_normalizer", c.hsic_degenerate}});
      evaluations += c.evaluations;
    }
    result.tables = {std::move(mmd), std::move(hsic)};
  } else {
    raise(ErrorCode::Domain, "unknown experiment '" + ex + "'");
  }
  result.eval_counts["model"] = evaluations;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateKernel:
    case ErrorCode::DegenerateSample:
    case ErrorCode::DegenerateOutput:
      return kExitDegenerate;
    case ErrorCode::AssumptionViolated:
      return kExitAssumption;
    default:
      return kExitFailure;
  }
}

const std::vector<std::string>& named_models() {
  static const std::vector<std::string> names = {"ishigami",     "ishigami3",    "stochastic",
                                                 "stochastic-mean", "sir-infected", "sir-reported",
                                                 "categorical"};
  return names;
}

RunResult run(const RunConfig& config) {
  config.validate();
  RunResult result;
  result.config_hash = config_hash(config);
  result.seed = config.est.seed;
  switch (config.command) {
    case Command::Estimate:
    case Command::Shapley: {
      const Problem p = config.data.empty() ? named_problem(config) : data_problem(config);
      if (config.command == Command::Estimate) {
        run_estimate(config, p, result);
      } else {
        run_shapley(config, p, result);
      }
      if (p.model) result.eval_counts["model"] = p.model->evaluations();
      break;
    }
    case Command::Reproduce:
      run_reproduce(config, result);
      break;
    case Command::VerifyKernels:
      raise(ErrorCode::Domain, "verify-kernels has no result bundle");
  }
  return result;
}

KernelVerification verify_kernels(const RunConfig& config) {
  config.validate();
  const KernelSpec spec = parse_kernel_spec(config.kernel);
  const MarginalDist marginal = parse_marginal(config.marginal.empty() ? "uniform:0,1" : config.marginal);
  std::vector<double> probes;
  for (int k = 1; k <= 9; ++k) probes.push_back(marginal.quantile(k / 10.0));
  KernelVerification v;
  v.check = verify_zero_mean(spec, marginal, probes, config.mc_n, config.est.seed);
  v.passed = v.check.max_ratio <= 3.0;
  return v;
}

}  // namespace kgsa::cli
