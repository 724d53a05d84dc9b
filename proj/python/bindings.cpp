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
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kgsa/cli/csv.hpp"
#include "kgsa/cli/run.hpp"
#include "kgsa/experiments.hpp"

namespace py = pybind11;
using namespace kgsa;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<OutputValue> to_outputs(const std::vector<double>& y, const std::string& kind) {
  std::vector<OutputValue> out;
  out.reserve(y.size());
  const OutputKind k = cli::parse_output_kind(kind);
  for (double v : y) {
    if (k == OutputKind::Categorical) {
      require(v >= 0 && v == std::floor(v), ErrorCode::Domain, "categorical outputs must be non-negative integers");
      out.emplace_back(Categorical{static_cast<int>(v)});
    } else {
      require(k == OutputKind::Scalar, ErrorCode::Unsupported, "only scalar and categorical outputs are accepted here");
      out.emplace_back(v);
    }
  }
  return out;
}

SampleSet to_sample(const RowMatrix& x, const std::vector<double>& y, const std::string& kind) {
  require(static_cast<std::size_t>(x.rows()) == y.size(), ErrorCode::Domain, "x and y have different lengths");
  SampleSet s;
  s.inputs = x;
  s.outputs = to_outputs(y, kind);
  for (Eigen::Index l = 0; l < x.cols(); ++l) s.input_names.push_back("x" + std::to_string(l + 1));
  s.validate();
  return s;
}

EstimatorConfig make_config(std::size_t n_a, std::size_t n_i, std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.n_a = n_a;
  cfg.n_i = n_i;
  cfg.seed = seed;
  return cfg;
}

// A single factor applies to every input column.
KernelSpec input_kernel(const std::string& spec, int d) {
  KernelSpec k = parse_kernel_spec(spec);
  if (k.get_if<ProductZeroMeanKernel>()) return k;
  return KernelSpec::product_zero_mean(std::vector<KernelSpec>(d, k));
}

std::vector<MarginalDist> marginals_of(const std::vector<std::string>& names) {
  std::vector<MarginalDist> out;
  for (const auto& n : names) out.push_back(parse_marginal(n));
  return out;
}

py::dict report_dict(const ShapleyReport& r) {
  py::dict d;
  d["effects"] = r.effects;
  d["normalizer"] = r.normalizer;
  d["method"] = r.method == ShapleyMethod::ExactSubsets ? "exact" : "permutation";
  d["num_perms"] = r.num_perms;
  d["negative_effects"] = r.negative_effects;
  d["degenerate_normalizer"] = r.degenerate_normalizer;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kernel-based global sensitivity analysis";

  py::register_exception<Error>(m, "KgsaError", PyExc_RuntimeError);

  m.def(
      "gram",
      [](const std::string& spec, const std::vector<double>& y, const std::string& kind) {
        const std::vector<OutputValue> out = to_outputs(y, kind);
        return resolve_and_gram(parse_kernel_spec(spec), out);
      },
      py::arg("kernel"), py::arg("y"), py::arg("kind") = "scalar",
      "Gram matrix of a kernel spec string over a 1-D output sample.");

  m.def(
      "verify_zero_mean",
      [](const std::string& spec, const std::string& marginal, int mc_n, std::uint64_t seed) {
        const MarginalDist law = parse_marginal(marginal);
        std::vector<double> probes;
        for (int q = 1; q <= 9; ++q) probes.push_back(law.quantile(q / 10.0));
        const ZeroMeanCheck c = verify_zero_mean(parse_kernel_spec(spec), law, probes, mc_n, seed);
        py::dict d;
        d["max_abs_mean"] = c.max_abs_mean;
        d["max_ratio"] = c.max_ratio;
        d["passed"] = c.max_ratio <= 3.0;
        return d;
      },
      py::arg("kernel"), py::arg("marginal") = "uniform:0,1", py::arg("mc_n") = 100000, py::arg("seed") = 0);

  m.def(
      "mmd_indices",
      [](const RowMatrix& x, const std::vector<double>& y, const std::string& kernel,
         const std::string& estimator, const std::string& kind, std::size_t n_a, std::size_t n_i,
         std::uint64_t seed) {
        const SampleSet s = to_sample(x, y, kind);
        const GramMatrix g = resolve_and_gram(parse_kernel_spec(kernel), s.outputs);
        const double total = mmd_total(g);
        require(total > 0.0, ErrorCode::DegenerateOutput, "output has no spread under this kernel");
        const EstimatorConfig cfg = make_config(n_a, n_i, seed);
        std::vector<double> first;
        for (int l = 0; l < s.d(); ++l) {
          if (estimator == "rank") {
            first.push_back(rank_mmd(g, s.column(l)) / total);
          } else {
            require(estimator == "knn", ErrorCode::Domain, "estimator must be 'rank' or 'knn'");
            first.push_back(knn_closed_value(g, s.inputs, Subset::singleton(l), cfg) / total);
          }
        }
        py::dict d;
        d["first_order"] = first;
        d["total"] = total;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("kernel") = "gaussian", py::arg("estimator") = "knn",
      py::arg("kind") = "scalar", py::arg("n_a") = 0, py::arg("n_i") = 10, py::arg("seed") = 0,
      "Normalized first-order MMD indices from a given sample.");

  m.def(
      "hsic_indices",
      [](const RowMatrix& x, const std::vector<double>& y, const std::string& kernel_in,
         const std::string& kernel_out, const std::string& flavor, const std::string& kind,
         const std::vector<std::string>& marginals) {
        const SampleSet s = to_sample(x, y, kind);
        const HsicGrams g = hsic_grams(s, input_kernel(kernel_in, s.d()), parse_kernel_spec(kernel_out),
                                       marginals_of(marginals));
        require(flavor == "U" || flavor == "V", ErrorCode::Domain, "flavor must be 'U' or 'V'");
        const IndexReport r = normalize(hsic_table(g, flavor == "U" ? HsicFlavor::U : HsicFlavor::V));
        py::dict pure;
        for (std::uint32_t bits = 1; bits < r.normalized.size(); ++bits) pure[py::str(Subset{bits}.label())] = r.normalized[bits];
        py::dict d;
        d["first_order"] = r.first_order;
        d["total_index"] = r.total_index;
        d["pure"] = pure;
        d["hsic"] = r.total;
        d["negative_terms"] = r.negative_terms;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("kernel_in") = "sobolev:r=1", py::arg("kernel_out") = "gaussian",
      py::arg("flavor") = "V", py::arg("kind") = "scalar", py::arg("marginals") = std::vector<std::string>{},
      "HSIC-ANOVA indices: first order, total and every pure term.");

  m.def(
      "shapley",
      [](const RowMatrix& x, const std::vector<double>& y, const std::string& flavor,
         const std::string& kernel_out, const std::string& kernel_in, const std::string& kind,
         std::optional<std::size_t> perms, std::size_t n_a, std::size_t n_i, std::uint64_t seed,
         const std::vector<std::string>& marginals) {
        const SampleSet s = to_sample(x, y, kind);
        const EstimatorConfig cfg = make_config(n_a, n_i, seed);
        if (flavor == "variance") return report_dict(variance_shapley(s, cfg, perms));
        if (flavor == "mmd") return report_dict(mmd_shapley_knn(s, parse_kernel_spec(kernel_out), cfg, perms));
        require(flavor == "hsic", ErrorCode::Domain, "flavor must be 'variance', 'mmd' or 'hsic'");
        return report_dict(hsic_shapley(s, input_kernel(kernel_in, s.d()), parse_kernel_spec(kernel_out), cfg,
                                        HsicFlavor::V, marginals_of(marginals), perms));
      },
      py::arg("x"), py::arg("y"), py::arg("flavor") = "mmd", py::arg("kernel_out") = "gaussian",
      py::arg("kernel_in") = "sobolev:r=1", py::arg("kind") = "scalar", py::arg("perms") = py::none(),
      py::arg("n_a") = 0, py::arg("n_i") = 10, py::arg("seed") = 0,
      py::arg("marginals") = std::vector<std::string>{}, "Shapley effects from a given sample.");

  m.def(
      "ishigami",
      [](const RowMatrix& x) {
        std::vector<double> y;
        for (Eigen::Index i = 0; i < x.rows(); ++i) y.push_back(ishigami(row_span(x, i)));
        return y;
      },
      py::arg("x"), "Ishigami function on each row (3 or 4 columns).");

  m.def(
      "ishigami_sobol_exact",
      []() {
        const IndexReport r = normalize(ishigami_variance_table(true));
        py::dict d;
        d["first_order"] = r.first_order;
        d["total_index"] = r.total_index;
        return d;
      },
      "Analytic Sobol indices of the Ishigami function with a dummy input.");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "kgsa");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the kgsa command line in process; returns (exit code, stdout, stderr).");
}
