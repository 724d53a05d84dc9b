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

#include "kgsa/testbed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "kgsa/error.hpp"

namespace kgsa {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

// ---------------------------------------------------------------------------
// Ishigami

double ishigami(std::span<const double> x) {
  require(x.size() == 3 || x.size() == 4, ErrorCode::Domain,
          "ishigami takes 3 or 4 inputs, got " + std::to_string(x.size()));
  for (double v : x) {
    require(std::isfinite(v) && std::abs(v) <= kPi, ErrorCode::Domain,
            "ishigami input outside [-pi, pi]: " + std::to_string(v));
  }
  const double s2 = std::sin(x[1]);
  const double x3 = x[2] * x[2];
  return std::sin(x[0]) * (1.0 + kIshigamiB * x3 * x3) + kIshigamiA * s2 * s2;
}

Model ishigami_model(bool with_dummy) {
  return Model(
      with_dummy ? 4 : 3, [](std::span<const double> x, Rng&) { return OutputValue{ishigami(x)}; },
      "ishigami");
}

InputSampler ishigami_sampler(bool with_dummy) {
  return InputSampler::independent(std::vector<MarginalDist>(
      with_dummy ? 4 : 3, MarginalDist::uniform(-kPi, kPi)));
}

ClosedValueTable ishigami_variance_table(bool with_dummy) {
  const double a = kIshigamiA;
  const double b = kIshigamiB;
  const double pi4 = std::pow(kPi, 4);
  const double pi8 = pi4 * pi4;
  const double v1 = b * pi4 / 5.0 + b * b * pi8 / 50.0 + 0.5;
  const double v2 = a * a / 8.0;
  const double v13 = 8.0 * b * b * pi8 / 225.0;
  const double total = v1 + v2 + v13;
  const int d = with_dummy ? 4 : 3;
  ClosedValueTable table(d, total);
  for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
    const Subset s{bits};
    double v = 0.0;
    if (s.contains(0)) v += v1;
    if (s.contains(1)) v += v2;
    if (s.contains(0) && s.contains(2)) v += v13;
    table.set(s, v);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Stochastic simulator

DistSample stochastic_sim(std::span<const double> x, int inner_sample, Rng& rng) {
  require(static_cast<int>(x.size()) == kStochasticInputs, ErrorCode::Domain,
          "stochastic simulator takes 5 inputs");
  require(inner_sample >= 1, ErrorCode::Domain, "inner sample size must be positive");
  for (double v : x) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::Domain,
            "stochastic simulator input outside [0, 1]: " + std::to_string(v));
  }
  double linear = 0.0;
  for (int i = 0; i < kStochasticInputs; ++i) linear += (i + 1) * x[i];
  DistSample out;
  out.values.resize(static_cast<std::size_t>(inner_sample));
  for (double& y : out.values) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform(1.0, 2.0);
    const double nz = rng.normal();
    const double b = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y = (x[0] + 2.0 * x[1] + u1) * std::sin(3.0 * x[2] - 4.0 * x[3] + nz) + u2 +
        5.0 * x[4] * b + linear;
  }
  return out;
}

Model stochastic_model(int inner_sample) {
  return Model(
      kStochasticInputs,
      [inner_sample](std::span<const double> x, Rng& rng) {
        return OutputValue{stochastic_sim(x, inner_sample, rng)};
      },
      "stochastic");
}

Model stochastic_mean_model(int inner_sample) {
  return Model(
      kStochasticInputs,
      [inner_sample](std::span<const double> x, Rng& rng) {
        const DistSample s = stochastic_sim(x, inner_sample, rng);
        double m = 0.0;
        for (double v : s.values) m += v;
        return OutputValue{m / static_cast<double>(s.values.size())};
      },
      "stochastic-mean");
}

InputSampler stochastic_sampler() {
  return InputSampler::independent(
      std::vector<MarginalDist>(kStochasticInputs, MarginalDist::uniform(0.0, 1.0)));
}

// ---------------------------------------------------------------------------
// SIR

SirParams SirParams::from_inputs(std::span<const double> x) {
  require(static_cast<int>(x.size()) == kSirInputs, ErrorCode::Domain,
          "SIR model takes 6 inputs (tau0, mu, N, 1/eta, 1/nu, chi2)");
  for (double v : x) require(std::isfinite(v), ErrorCode::Domain, "non-finite SIR input");
  require(x[3] > 0.0 && x[4] > 0.0, ErrorCode::Domain, "1/eta and 1/nu must be positive");
  SirParams p;
  p.tau0 = x[0];
  p.mu = x[1];
  p.n_days = x[2];
  p.eta = 1.0 / x[3];
  p.nu = 1.0 / x[4];
  p.chi2 = x[5];
  return p;
}

namespace {

using State = std::array<double, 5>;  // S, I, R, U, Rec

State sir_rhs(const SirParams& p, double t, const State& y) {
  const double tau = p.tau0 * std::exp(-p.mu * std::max(t - p.n_days, 0.0));
  const double infection = tau * y[0] * (y[1] + y[3]);
  return {-infection, infection - p.nu * y[1], p.f * p.nu * y[1] - p.eta * y[2],
          (1.0 - p.f) * p.nu * y[1] - p.eta * y[3], p.eta * (y[2] + y[3])};
}

}  // namespace

SirTrajectory sir_integrate(const SirParams& p, double dt, double horizon) {
  require(dt > 0.0 && horizon > 0.0, ErrorCode::Domain, "dt and horizon must be positive");
  require(p.nu > 0.0 && p.eta > 0.0 && p.f >= 0.0 && p.f <= 1.0 && p.s0 > 0.0,
          ErrorCode::Domain, "invalid SIR parameters");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  require(steps >= 1 && std::abs(static_cast<double>(steps) * dt - horizon) <= 1e-9 * horizon,
          ErrorCode::Domain, "horizon must be a multiple of dt");

  const double i0 = p.chi2 / (p.f * p.nu);
  const double u0 = (1.0 - p.f) * p.nu / (p.eta + p.chi2) * i0;
  State y{p.s0, i0, 1.0, u0, 0.0};

  SirTrajectory traj;
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.s.push_back(y[0]);
    traj.i.push_back(y[1]);
    traj.r.push_back(y[2]);
    traj.u.push_back(y[3]);
    traj.recovered.push_back(y[4]);
  };
  record(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const State k1 = sir_rhs(p, t, y);
    State tmp;
    for (int c = 0; c < 5; ++c) tmp[c] = y[c] + 0.5 * dt * k1[c];
    const State k2 = sir_rhs(p, t + 0.5 * dt, tmp);
    for (int c = 0; c < 5; ++c) tmp[c] = y[c] + 0.5 * dt * k2[c];
    const State k3 = sir_rhs(p, t + 0.5 * dt, tmp);
    for (int c = 0; c < 5; ++c) tmp[c] = y[c] + dt * k3[c];
    const State k4 = sir_rhs(p, t + dt, tmp);
    for (int c = 0; c < 5; ++c) y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    for (int c = 0; c < 5; ++c) {
      if (!std::isfinite(y[c]) || y[c] < -1e-9) {
        raise(ErrorCode::Instability, "SIR integration went negative at t = " +
                                          std::to_string(t + dt) + "; reduce dt");
      }
    }
    record(static_cast<double>(k + 1) * dt);
  }
  return traj;
}

SirCurves sir_simulate(const SirParams& params, double dt, double horizon) {
  const SirTrajectory traj = sir_integrate(params, dt, horizon);
  SirCurves out;
  out.infected.times = traj.times;
  out.reported.times = traj.times;
  out.infected.values.reserve(traj.times.size());
  out.reported.values.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out.infected.values.push_back(traj.i[k] / params.s0);
    out.reported.values.push_back(traj.r[k] / params.s0);
  }
  return out;
}

SirCurves sir_resample(const SirCurves& curves, double step) {
  require(step > 0.0, ErrorCode::Domain, "resampling step must be positive");
  SirCurves out;
  const auto& t = curves.infected.times;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double q = t[k] / step;
    if (std::abs(q - std::round(q)) > 1e-6) continue;
    out.infected.times.push_back(t[k]);
    out.reported.times.push_back(t[k]);
    out.infected.values.push_back(curves.infected.values[k]);
    out.reported.values.push_back(curves.reported.values[k]);
  }
  require(!out.infected.times.empty(), ErrorCode::Domain, "no time point on the resampling grid");
  return out;
}

Model sir_model(SirCompartment compartment, double dt, double horizon, double output_step) {
  return Model(
      kSirInputs,
      [=](std::span<const double> x, Rng&) {
        const SirCurves curves =
            sir_resample(sir_simulate(SirParams::from_inputs(x), dt, horizon), output_step);
        return OutputValue{compartment == SirCompartment::Infected ? curves.infected
                                                                   : curves.reported};
      },
      compartment == SirCompartment::Infected ? "sir-infected" : "sir-reported");
}

InputSampler sir_sampler() {
  return InputSampler::independent({
      MarginalDist::uniform(5.9e-9, 6.1e-9),
      MarginalDist::uniform(0.028, 0.036),
      MarginalDist::uniform(8.0, 15.0),
      MarginalDist::uniform(5.0, 9.0),
      MarginalDist::uniform(5.0, 9.0),
      MarginalDist::uniform(0.32, 0.40),
  });
}

std::vector<std::string> sir_input_names() {
  return {"tau0", "mu", "N", "inv_eta", "inv_nu", "chi2"};
}

// ---------------------------------------------------------------------------
// Copula and categorical model

InputMatrix gaussian_copula_sample(const Eigen::MatrixXd& corr,
                                   const std::vector<MarginalDist>& marginals, std::size_t n,
                                   std::uint64_t seed) {
  const InputSampler sampler = InputSampler::gaussian_copula(corr, marginals);
  Rng rng = Rng(seed).substream({stream_tag::kSampling});
  return sampler.sample(n, rng);
}

CategoricalSynthetic CategoricalSynthetic::standard() {
  CategoricalSynthetic m;
  m.corr = Eigen::MatrixXd::Identity(4, 4);
  m.corr(0, 1) = m.corr(1, 0) = 0.4;
  m.corr(1, 2) = m.corr(2, 1) = 0.3;
  m.corr(2, 3) = m.corr(3, 2) = -0.3;
  m.weights = {1.0, 0.5, 0.5, 3.0};
  m.thresholds = {2.0, 3.0};
  m.dominant_input = 3;
  return m;
}

int CategoricalSynthetic::level(std::span<const double> x) const {
  require(x.size() == weights.size(), ErrorCode::Domain, "categorical model input size mismatch");
  double score = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) score += weights[l] * x[l];
  int k = 0;
  while (k < static_cast<int>(thresholds.size()) && score >= thresholds[k]) ++k;
  return k;
}

Model CategoricalSynthetic::model() const {
  return Model(
      static_cast<int>(weights.size()),
      [self = *this](std::span<const double> x, Rng&) {
        return OutputValue{Categorical{self.level(x)}};
      },
      "categorical");
}

InputSampler CategoricalSynthetic::sampler() const {
  return InputSampler::gaussian_copula(
      corr, std::vector<MarginalDist>(weights.size(), MarginalDist::uniform(0.0, 1.0)));
}

// ---------------------------------------------------------------------------
// Discrete enumeration

int DiscreteModel::d() const {
  require(!atoms.empty(), ErrorCode::Domain, "discrete model has no atoms");
  return static_cast<int>(atoms.front().x.size());
}

void DiscreteModel::validate() const {
  require(!atoms.empty(), ErrorCode::Domain, "discrete model has no atoms");
  require(atoms.size() <= kMaxDiscreteSupport, ErrorCode::TooLarge,
          "discrete support exceeds " + std::to_string(kMaxDiscreteSupport) + " atoms");
  const std::size_t d = atoms.front().x.size();
  require(d >= 1 && static_cast<int>(d) <= kMaxSubsetDimension, ErrorCode::Domain,
          "discrete model dimension out of range");
  double total = 0.0;
  for (const auto& atom : atoms) {
    require(atom.x.size() == d, ErrorCode::Domain, "atoms have inconsistent dimensions");
    require(std::isfinite(atom.prob) && atom.prob >= 0.0, ErrorCode::Domain,
            "atom probability must be non-negative");
    kgsa::validate(atom.y);
    total += atom.prob;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorCode::Domain,
          "atom probabilities sum to " + std::to_string(total) + ", not 1");
}

namespace {

using Groups = std::vector<std::vector<std::size_t>>;

Groups group_by(const DiscreteModel& model, Subset a) {
  std::map<std::vector<double>, std::size_t> index;
  Groups groups;
  const std::vector<int> cols = a.indices();
  for (std::size_t i = 0; i < model.atoms.size(); ++i) {
    std::vector<double> key;
    key.reserve(cols.size());
    for (int c : cols) key.push_back(model.atoms[i].x[c]);
    auto [it, inserted] = index.emplace(std::move(key), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

Eigen::MatrixXd output_gram(const DiscreteModel& model, const KernelSpec& spec) {
  std::vector<OutputValue> ys;
  ys.reserve(model.atoms.size());
  for (const auto& atom : model.atoms) ys.push_back(atom.y);
  return gram(spec, ys);
}

Eigen::VectorXd probs(const DiscreteModel& model) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(model.atoms.size()));
  for (std::size_t i = 0; i < model.atoms.size(); ++i) p[i] = model.atoms[i].prob;
  return p;
}

// sum_g (1 / P(g)) sum_{i, j in g} p_i p_j k(y_i, y_j).
double conditional_self_term(const Groups& groups, const Eigen::VectorXd& p,
                             const Eigen::MatrixXd& k) {
  double out = 0.0;
  for (const auto& g : groups) {
    double mass = 0.0;
    double s = 0.0;
    for (std::size_t i : g) {
      mass += p[i];
      for (std::size_t j : g) s += p[i] * p[j] * k(i, j);
    }
    if (mass > 0.0) out += s / mass;
  }
  return out;
}

double hsic_population(const DiscreteModel& model, const HsicClosed& q, Subset a) {
  const auto* product = q.input.get_if<ProductZeroMeanKernel>();
  require(product != nullptr, ErrorCode::Domain, "HSIC input kernel must be a product kernel");
  const int d = model.d();
  require(static_cast<int>(product->factors.size()) == d, ErrorCode::Domain,
          "product kernel has " + std::to_string(product->factors.size()) +
              " factors for " + std::to_string(d) + " inputs");
  const auto n = static_cast<Eigen::Index>(model.atoms.size());
  const Eigen::VectorXd p = probs(model);
  const Eigen::MatrixXd ky = output_gram(model, q.output);
  const std::vector<int> active = a.indices();
  Eigen::MatrixXd kx(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& xi = model.atoms[i].x;
      const auto& xj = model.atoms[j].x;
      double v = 1.0;
      for (int l : active) {
        const double kl = eval_kernel(product->factors[l], xi[l], xj[l]);
        v *= q.pure ? kl : 1.0 + kl;
      }
      kx(i, j) = q.pure ? v : v - 1.0;
    }
  }
  const double t1 = p.dot((kx.array() * ky.array()).matrix() * p);
  const double t2 = p.dot(kx * p) * p.dot(ky * p);
  const double t3 = p.dot(((kx * p).array() * (ky * p).array()).matrix());
  return t1 + t2 - 2.0 * t3;
}

}  // namespace

double discrete_variance(const DiscreteModel& model) {
  model.validate();
  double m = 0.0;
  double m2 = 0.0;
  for (const auto& atom : model.atoms) {
    const double* y = std::get_if<double>(&atom.y);
    require(y != nullptr, ErrorCode::VariantMismatch, "variance needs scalar outputs");
    m += atom.prob * *y;
    m2 += atom.prob * *y * *y;
  }
  return m2 - m * m;
}

double discrete_mmd_total(const DiscreteModel& model, const KernelSpec& output) {
  model.validate();
  const Eigen::VectorXd p = probs(model);
  const Eigen::MatrixXd k = output_gram(model, output);
  return p.dot(k.diagonal()) - p.dot(k * p);
}

double discrete_enumerate(const DiscreteModel& model, const DiscreteQuantity& quantity,
                          Subset a) {
  model.validate();
  const int d = model.d();
  const Subset full = Subset::full(d);
  require((a.bits & ~full.bits) == 0, ErrorCode::Domain,
          "subset " + a.label() + " exceeds the input dimension");
  return std::visit(
      [&](const auto& q) -> double {
        using Q = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<Q, SobolClosed>) {
          double mean = 0.0;
          for (const auto& atom : model.atoms) {
            const double* y = std::get_if<double>(&atom.y);
            require(y != nullptr, ErrorCode::VariantMismatch, "Sobol values need scalar outputs");
            mean += atom.prob * *y;
          }
          double v = 0.0;
          for (const auto& g : group_by(model, a)) {
            double mass = 0.0;
            double s = 0.0;
            for (std::size_t i : g) {
              mass += model.atoms[i].prob;
              s += model.atoms[i].prob * std::get<double>(model.atoms[i].y);
            }
            if (mass > 0.0) v += mass * (s / mass - mean) * (s / mass - mean);
          }
          return v;
        } else if constexpr (std::is_same_v<Q, MmdClosed>) {
          const Eigen::VectorXd p = probs(model);
          const Eigen::MatrixXd k = output_gram(model, q.output);
          return conditional_self_term(group_by(model, a), p, k) - p.dot(k * p);
        } else if constexpr (std::is_same_v<Q, ComplementaryClosed>) {
          const Eigen::VectorXd p = probs(model);
          const Eigen::MatrixXd k = output_gram(model, q.output);
          return p.dot(k.diagonal()) -
                 conditional_self_term(group_by(model, a.complement(d)), p, k);
        } else {
          return hsic_population(model, q, a);
        }
      },
      quantity);
}

ClosedValueTable discrete_table(const DiscreteModel& model, const DiscreteQuantity& quantity,
                                double total) {
  const int d = model.d();
  ClosedValueTable table(d, total);
  for (std::uint32_t bits = 1; bits < (1u << d); ++bits) {
    table.set(Subset{bits}, discrete_enumerate(model, quantity, Subset{bits}));
  }
  return table;
}

}  // namespace kgsa
