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

#include "kgsa/cli/config.hpp"

#include <cstdio>
#include <set>

#include "kgsa/error.hpp"

namespace kgsa::cli {

using nlohmann::json;

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Estimate:
      return "estimate";
    case Command::Shapley:
      return "shapley";
    case Command::Reproduce:
      return "reproduce";
    case Command::VerifyKernels:
      return "verify-kernels";
  }
  return "unknown";
}

Command parse_command(std::string_view text) {
  for (Command c : {Command::Estimate, Command::Shapley, Command::Reproduce,
                    Command::VerifyKernels}) {
    if (to_string(c) == text) return c;
  }
  raise(ErrorCode::Parse, "unknown command '" + std::string(text) + "'");
}

json RunConfig::to_json() const {
  json j;
  j["command"] = std::string(to_string(command));
  switch (command) {
    case Command::Reproduce:
      j["experiment"] = experiment;
      j["n"] = est.n;
      j["reps"] = reps;
      j["seed"] = est.seed;
      j["na"] = est.n_a;
      j["ni"] = est.n_i;
      if (experiment == "stochastic") {
        j["n_kernel"] = n_kernel;
        j["inner"] = inner;
      }
      if (!kernel_out.empty()) j["kernel_out"] = kernel_out;
      if (perms) j["perms"] = *perms;
      break;
    case Command::VerifyKernels:
      j["kernel"] = kernel;
      j["marginal"] = marginal;
      j["mc_n"] = mc_n;
      j["seed"] = est.seed;
      break;
    case Command::Estimate:
    case Command::Shapley:
      if (!model.empty()) j["model"] = model;
      if (!data.empty()) {
        j["data"] = data;
        j["output_column"] = output_column;
        j["output_kind"] = output_kind;
        j["input_columns"] = input_columns;
      }
      if (!model.empty() && model == "stochastic") j["inner"] = inner;
      j["kernel_out"] = kernel_out;
      j["kernel_in"] = kernel_in;
      j["estimator"] = estimator;
      j["n"] = est.n;
      j["m"] = est.m;
      j["na"] = est.n_a;
      j["ni"] = est.n_i;
      j["seed"] = est.seed;
      j["reps"] = reps;
      if (perms) j["perms"] = *perms;
      break;
  }
  return j;
}

void RunConfig::apply_json(const json& j) {
  require(j.is_object(), ErrorCode::Parse, "config must be a JSON object");
  static const std::set<std::string> known = {
      "command", "experiment", "model",  "data",     "output_column", "output_kind",
      "input_columns", "kernel_out", "kernel_in", "estimator", "n", "m", "na", "ni", "seed",
      "reps", "perms", "out", "force", "kernel", "marginal", "mc_n", "n_kernel", "inner"};
  for (const auto& [key, value] : j.items()) {
    require(known.count(key) != 0, ErrorCode::Parse, "unknown config key '" + key + "'");
  }
  try {
    if (j.contains("command")) command = parse_command(j["command"].get<std::string>());
    auto str = [&](const char* key, std::string& field) {
      if (j.contains(key)) field = j[key].get<std::string>();
    };
    auto size = [&](const char* key, std::size_t& field) {
      if (j.contains(key)) field = j[key].get<std::size_t>();
    };
    str("experiment", experiment);
    str("model", model);
    str("data", data);
    str("output_column", output_column);
    str("output_kind", output_kind);
    str("kernel_out", kernel_out);
    str("kernel_in", kernel_in);
    str("estimator", estimator);
    str("out", out_dir);
    str("kernel", kernel);
    str("marginal", marginal);
    if (j.contains("input_columns")) input_columns = j["input_columns"].get<std::vector<std::string>>();
    size("n", est.n);
    size("m", est.m);
    size("na", est.n_a);
    size("ni", est.n_i);
    size("reps", reps);
    size("n_kernel", n_kernel);
    if (j.contains("seed")) est.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("perms")) perms = j["perms"].get<std::size_t>();
    if (j.contains("force")) force = j["force"].get<bool>();
    if (j.contains("mc_n")) mc_n = j["mc_n"].get<int>();
    if (j.contains("inner")) inner = j["inner"].get<int>();
  } catch (const json::exception& e) {
    raise(ErrorCode::Parse, std::string("config: ") + e.what());
  }
}

void RunConfig::validate() const {
  require(reps >= 1, ErrorCode::Domain, "reps must be at least 1");
  switch (command) {
    case Command::Reproduce: {
      static const std::set<std::string> experiments = {"ishigami", "stochastic", "sir",
                                                        "categorical"};
      require(experiments.count(experiment) != 0, ErrorCode::Domain,
              "reproduce needs one of ishigami, stochastic, sir, categorical");
      require(inner >= 1 && n_kernel >= 2, ErrorCode::Domain, "inner and n_kernel must be positive");
      break;
    }
    case Command::VerifyKernels:
      require(!kernel.empty(), ErrorCode::Domain, "verify-kernels needs --kernel");
      require(mc_n >= 2, ErrorCode::Domain, "mc_n must be at least 2");
      break;
    case Command::Estimate:
    case Command::Shapley:
      require(model.empty() != data.empty(), ErrorCode::Domain,
              "exactly one of --model and --data must be given");
      est.validate();
      break;
  }
}

std::string config_hash(const RunConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kgsa::cli
