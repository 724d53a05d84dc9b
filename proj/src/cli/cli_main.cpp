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

#include <fstream>
#include <functional>
#include <ostream>

#include <CLI11.hpp>

#include "kgsa/cli/run.hpp"

namespace kgsa::cli {

namespace {

// Values given on the command line; applied over --config only when present.
struct Flags {
  std::string config_path;
  std::string experiment, model, data, output_column, output_kind, kernel_out, kernel_in,
      estimator, out_dir, kernel, marginal;
  std::vector<std::string> input_columns;
  std::size_t n = 0, m = 0, na = 0, ni = 0, reps = 0, perms = 0, n_kernel = 0;
  std::uint64_t seed = 0;
  int inner = 0, mc_n = 0;
  bool force = false;
};

using Apply = std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>>;

template <typename T, typename Set>
void flag(CLI::App* app, Apply& apply, const std::string& name, T& value, const std::string& help,
          Set set) {
  CLI::Option* opt = app->add_option(name, value, help);
  apply.emplace_back(opt, [&value, set](RunConfig& c) { set(c, value); });
}

void add_common(CLI::App* app, Flags& f, Apply& apply) {
  app->add_option("--config", f.config_path, "JSON run configuration; flags override it");
  flag(app, apply, "--n", f.n, "sample size", [](RunConfig& c, std::size_t v) { c.est.n = v; });
  flag(app, apply, "--seed", f.seed, "base seed", [](RunConfig& c, std::uint64_t v) { c.est.seed = v; });
  flag(app, apply, "--reps", f.reps, "independent replicates",
       [](RunConfig& c, std::size_t v) { c.reps = v; });
  flag(app, apply, "--na", f.na, "kNN anchor count (0: min(n, 500))",
       [](RunConfig& c, std::size_t v) { c.est.n_a = v; });
  flag(app, apply, "--ni", f.ni, "kNN neighbour count", [](RunConfig& c, std::size_t v) { c.est.n_i = v; });
  flag(app, apply, "--perms", f.perms, "Shapley permutation count",
       [](RunConfig& c, std::size_t v) { c.perms = v; });
  flag(app, apply, "--kernel-out", f.kernel_out, "output kernel spec",
       [](RunConfig& c, const std::string& v) { c.kernel_out = v; });
  flag(app, apply, "--out", f.out_dir, "output directory",
       [](RunConfig& c, const std::string& v) { c.out_dir = v; });
  CLI::Option* force = app->add_flag("--force", f.force, "overwrite results of another configuration");
  apply.emplace_back(force, [&f](RunConfig& c) { c.force = f.force; });
}

void add_analysis(CLI::App* app, Flags& f, Apply& apply) {
  add_common(app, f, apply);
  flag(app, apply, "--model", f.model, "named model", [](RunConfig& c, const std::string& v) { c.model = v; });
  flag(app, apply, "--data", f.data, "CSV sample", [](RunConfig& c, const std::string& v) { c.data = v; });
  flag(app, apply, "--output-column", f.output_column, "output column of --data",
       [](RunConfig& c, const std::string& v) { c.output_column = v; });
  flag(app, apply, "--output-kind", f.output_kind, "scalar | categorical | curve | distribution",
       [](RunConfig& c, const std::string& v) { c.output_kind = v; });
  CLI::Option* inputs = app->add_option("--inputs", f.input_columns, "input columns of --data")->delimiter(',');
  apply.emplace_back(inputs, [&f](RunConfig& c) { c.input_columns = f.input_columns; });
  flag(app, apply, "--kernel-in", f.kernel_in, "HSIC input kernel spec",
       [](RunConfig& c, const std::string& v) { c.kernel_in = v; });
  flag(app, apply, "--estimator", f.estimator, "estimator name",
       [](RunConfig& c, const std::string& v) { c.estimator = v; });
  flag(app, apply, "--m", f.m, "double-loop inner sample size",
       [](RunConfig& c, std::size_t v) { c.est.m = v; });
  flag(app, apply, "--inner", f.inner, "inner sample size of the stochastic model",
       [](RunConfig& c, int v) { c.inner = v; });
}

void load_config(const std::string& path, RunConfig& config) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, path + ": " + e.what());
  }
  const Command command = config.command;
  config.apply_json(j);
  require(config.command == command, ErrorCode::Parse,
          path + ": config is for '" + std::string(to_string(config.command)) + "', not '" +
              std::string(to_string(command)) + "'");
}

void print_summary(const RunResult& result, std::ostream& out) {
  const nlohmann::json summary = summary_json(result.tables);
  for (const auto& t : result.tables) {
    out << t.name << " (" << t.rows.size() << " replicate" << (t.rows.size() == 1 ? "" : "s")
        << ", median):\n";
    for (const auto& c : t.columns) {
      const auto& q = summary[t.name][c]["q50"];
      out << "  " << c << " = " << (q.is_null() ? std::string("nan") : q.dump()) << '\n';
    }
  }
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel-based global sensitivity analysis"};
  app.require_subcommand(1);
  Flags f;
  Apply estimate_apply, shapley_apply, reproduce_apply, verify_apply;

  CLI::App* estimate = app.add_subcommand("estimate", "first-order and total indices");
  add_analysis(estimate, f, estimate_apply);
  CLI::App* shapley = app.add_subcommand("shapley", "Shapley effects");
  add_analysis(shapley, f, shapley_apply);

  CLI::App* reproduce = app.add_subcommand("reproduce", "replicated benchmark studies");
  reproduce->add_option("experiment", f.experiment, "ishigami | stochastic | sir | categorical");
  reproduce_apply.emplace_back(reproduce->get_option("experiment"),
                               [&f](RunConfig& c) { c.experiment = f.experiment; });
  add_common(reproduce, f, reproduce_apply);
  flag(reproduce, reproduce_apply, "--n-kernel", f.n_kernel, "stochastic: kernel-index sample size",
       [](RunConfig& c, std::size_t v) { c.n_kernel = v; });
  flag(reproduce, reproduce_apply, "--inner", f.inner, "stochastic: inner sample size",
       [](RunConfig& c, int v) { c.inner = v; });

  CLI::App* verify = app.add_subcommand("verify-kernels", "Monte Carlo zero-mean check of a kernel");
  verify->add_option("--config", f.config_path, "JSON run configuration; flags override it");
  flag(verify, verify_apply, "--kernel", f.kernel, "kernel spec",
       [](RunConfig& c, const std::string& v) { c.kernel = v; });
  flag(verify, verify_apply, "--marginal", f.marginal, "input law, e.g. uniform:0,1 (default)",
       [](RunConfig& c, const std::string& v) { c.marginal = v; });
  flag(verify, verify_apply, "--mc-n", f.mc_n, "Monte Carlo draws per probe",
       [](RunConfig& c, int v) { c.mc_n = v; });
  flag(verify, verify_apply, "--seed", f.seed, "seed", [](RunConfig& c, std::uint64_t v) { c.est.seed = v; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitFailure;
  }

  try {
    RunConfig config;
    Apply* apply = nullptr;
    if (estimate->parsed()) {
      config.command = Command::Estimate;
      apply = &estimate_apply;
    } else if (shapley->parsed()) {
      config.command = Command::Shapley;
      apply = &shapley_apply;
    } else if (reproduce->parsed()) {
      config.command = Command::Reproduce;
      apply = &reproduce_apply;
    } else {
      config.command = Command::VerifyKernels;
      apply = &verify_apply;
    }
    if (!f.config_path.empty()) load_config(f.config_path, config);
    for (auto& [opt, set] : *apply) {
      if (opt->count() > 0) set(config);
    }

    if (config.command == Command::VerifyKernels) {
      const KernelVerification v = verify_kernels(config);
      out << "kernel " << config.kernel << " under "
          << (config.marginal.empty() ? "uniform:0,1" : config.marginal) << ": max |mean| "
          << v.check.max_abs_mean << ", worst |mean|/se " << v.check.max_ratio << " -> "
          << (v.passed ? "zero-mean" : "NOT zero-mean") << '\n';
      return v.passed ? kExitOk : kExitAssumption;
    }

    const RunResult result = run(config);
    write_results(result, config.out_dir, config.force);
    print_summary(result, out);
    out << "config_hash " << result.config_hash << ", results in " << config.out_dir << '\n';
    if (result.degenerate) {
      err << "error: degenerate output: some Shapley normalizer is not positive\n";
      return kExitDegenerate;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace kgsa::cli
