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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "kgsa/estimators.hpp"
#include "kgsa/kernel.hpp"
#include "kgsa/sampling.hpp"
#include "kgsa/subset.hpp"

namespace kgsa {

// ---------------------------------------------------------------------------
// Ishigami: sin(x1) + a sin(x2)^2 + b x3^4 sin(x1), inputs U(-pi, pi).

inline constexpr double kIshigamiA = 7.0;
inline constexpr double kIshigamiB = 0.1;

/// Accepts 3 or 4 inputs (the 4th is a dummy); Domain error outside [-pi, pi].
double ishigami(std::span<const double> x);
Model ishigami_model(bool with_dummy = true);
InputSampler ishigami_sampler(bool with_dummy = true);

/// Exact closed values Var E(Y | X_A) and total Var Y.
ClosedValueTable ishigami_variance_table(bool with_dummy = true);

// ---------------------------------------------------------------------------
// Stochastic simulator with distribution-valued output.

inline constexpr int kStochasticInputs = 5;

/// (x1 + 2 x2 + U1) sin(3 x3 - 4 x4 + N) + U2 + 5 x5 B + sum_i i x_i, with
/// U1 ~ U(0,1), U2 ~ U(1,2), N ~ N(0,1), B ~ Bernoulli(1/2); returns
/// `inner_sample` draws. Domain error outside [0,1]^5.
DistSample stochastic_sim(std::span<const double> x, int inner_sample, Rng& rng);
Model stochastic_model(int inner_sample = 100);
/// Scalar model returning the mean of the inner draws.
Model stochastic_mean_model(int inner_sample = 100);
InputSampler stochastic_sampler();

// ---------------------------------------------------------------------------
// SIR-type epidemic model with reported (R) and unreported (U) infectious.

struct SirParams {
  double tau0 = 6.0e-9;
  double mu = 0.032;
  double n_days = 11.5;
  /// eta is the recovery rate; inputs are expressed as 1/eta days.
  double eta = 1.0 / 7.0;
  double nu = 1.0 / 7.0;
  double chi2 = 0.36;
  double s0 = 66.99e6;
  double f = 0.1;

  /// Inputs ordered (tau0, mu, N, 1/eta, 1/nu, chi2).
  static SirParams from_inputs(std::span<const double> x);
};

inline constexpr int kSirInputs = 6;
inline constexpr double kSirDefaultDt = 0.1;
inline constexpr double kSirDefaultHorizon = 120.0;
/// Output resolution used for sensitivity analysis (days).
inline constexpr double kSirOutputStep = 2.0;

struct SirTrajectory {
  std::vector<double> times;
  std::vector<double> s;
  std::vector<double> i;
  std::vector<double> r;
  std::vector<double> u;
  /// Bookkeeping compartment fed by eta (R + U).
  std::vector<double> recovered;
};

/// Fixed-step RK4. Instability error when a compartment drops below -1e-9.
SirTrajectory sir_integrate(const SirParams& params, double dt = kSirDefaultDt,
                            double horizon = kSirDefaultHorizon);

struct SirCurves {
  Curve infected;
  Curve reported;
};

/// I(t)/S0 and R(t)/S0 at every dt.
SirCurves sir_simulate(const SirParams& params, double dt = kSirDefaultDt,
                       double horizon = kSirDefaultHorizon);

/// Curves restricted to multiples of `step` days.
SirCurves sir_resample(const SirCurves& curves, double step);

enum class SirCompartment { Infected, Reported };

Model sir_model(SirCompartment compartment, double dt = kSirDefaultDt,
                double horizon = kSirDefaultHorizon, double output_step = kSirOutputStep);
InputSampler sir_sampler();
std::vector<std::string> sir_input_names();

// ---------------------------------------------------------------------------
// Gaussian copula helper.

InputMatrix gaussian_copula_sample(const Eigen::MatrixXd& corr,
                                   const std::vector<MarginalDist>& marginals, std::size_t n,
                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic categorical model with dependent inputs.

struct CategoricalSynthetic {
  /// Four U(0,1) inputs coupled by a Gaussian copula.
  Eigen::MatrixXd corr;
  std::vector<double> weights;
  std::vector<double> thresholds;
  int dominant_input = 3;

  static CategoricalSynthetic standard();
  [[nodiscard]] int level(std::span<const double> x) const;
  [[nodiscard]] Model model() const;
  [[nodiscard]] InputSampler sampler() const;
  [[nodiscard]] int num_levels() const { return static_cast<int>(thresholds.size()) + 1; }
};

// ---------------------------------------------------------------------------
// Finite joint laws, enumerated exactly.

struct DiscreteAtom {
  std::vector<double> x;
  OutputValue y;
  double prob = 0.0;
};

struct DiscreteModel {
  std::vector<DiscreteAtom> atoms;

  [[nodiscard]] int d() const;
  /// Probabilities non-negative and summing to one; consistent dimensions.
  void validate() const;
};

inline constexpr std::size_t kMaxDiscreteSupport = 10000;

struct SobolClosed {};
struct MmdClosed {
  KernelSpec output;
};
/// HSIC(X_A, Y) in its population form. With `pure` the input kernel is
/// prod_{l in A} k_l, otherwise prod_{l in A}(1 + k_l) - 1.
struct HsicClosed {
  KernelSpec input;
  KernelSpec output;
  bool pure = false;
};
/// E_{X_{-A}}[E k(xi, xi) - E k(xi, xi')] with xi, xi' ~ P_{Y | X_{-A}}.
struct ComplementaryClosed {
  KernelSpec output;
};

using DiscreteQuantity = std::variant<SobolClosed, MmdClosed, HsicClosed, ComplementaryClosed>;

double discrete_enumerate(const DiscreteModel& model, const DiscreteQuantity& quantity, Subset a);
double discrete_variance(const DiscreteModel& model);
/// E k(Y, Y) - E k(Y, Y').
double discrete_mmd_total(const DiscreteModel& model, const KernelSpec& output);
/// Closed table of a quantity over all subsets; total as given.
ClosedValueTable discrete_table(const DiscreteModel& model, const DiscreteQuantity& quantity,
                                double total);

}  // namespace kgsa
