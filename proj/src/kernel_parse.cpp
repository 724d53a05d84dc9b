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

#include <cctype>
#include <charconv>
#include <map>
#include <string>
#include <vector>

#include "kgsa/error.hpp"
#include "kgsa/kernel.hpp"

namespace kgsa {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_parens(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = trim(s.substr(1, s.size() - 2));
  return s;
}

// Splits at top-level commas (outside parentheses).
std::vector<std::string_view> split_args(std::string_view s, std::string_view context) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') {
      --depth;
      require(depth >= 0, ErrorCode::Parse, "unbalanced ')' in '" + std::string(context) + "'");
    }
    if (s[i] == ',' && depth == 0) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  require(depth == 0, ErrorCode::Parse, "unbalanced '(' in '" + std::string(context) + "'");
  if (!trim(s.substr(start)).empty() || !parts.empty()) parts.push_back(trim(s.substr(start)));
  return parts;
}

struct Args {
  std::string context;
  std::vector<std::string_view> positional;
  std::map<std::string, std::string_view, std::less<>> named;

  [[nodiscard]] bool has(std::string_view key) const { return named.contains(key); }

  [[nodiscard]] std::string_view get(std::string_view key, std::size_t position) const {
    if (auto it = named.find(key); it != named.end()) return it->second;
    if (position < positional.size()) return positional[position];
    raise(ErrorCode::Parse, "missing '" + std::string(key) + "' in '" + context + "'");
  }

  [[nodiscard]] bool present(std::string_view key, std::size_t position) const {
    return named.contains(key) || position < positional.size();
  }
};

Args parse_args(std::string_view body, std::string_view context) {
  Args args;
  args.context = std::string(context);
  for (std::string_view part : split_args(body, context)) {
    require(!part.empty(), ErrorCode::Parse, "empty argument in '" + std::string(context) + "'");
    const auto eq = part.find('=');
    const auto paren = part.find('(');
    if (eq != std::string_view::npos && (paren == std::string_view::npos || eq < paren)) {
      args.named.emplace(std::string(trim(part.substr(0, eq))), trim(part.substr(eq + 1)));
    } else {
      args.positional.push_back(part);
    }
  }
  return args;
}

double parse_double(std::string_view text, std::string_view context) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  require(result.ec == std::errc() && result.ptr == end, ErrorCode::Parse,
          "expected a number, got '" + std::string(text) + "' in '" + std::string(context) + "'");
  return value;
}

int parse_int(std::string_view text, std::string_view context) {
  text = trim(text);
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  require(result.ec == std::errc() && result.ptr == end, ErrorCode::Parse,
          "expected an integer, got '" + std::string(text) + "' in '" + std::string(context) +
              "'");
  return value;
}

// "median" (or absent) maps to 0, the unresolved marker.
double parse_param(const Args& args, std::string_view key, std::size_t position) {
  if (!args.present(key, position)) return 0.0;
  const std::string_view v = trim(args.get(key, position));
  if (v == "median") return 0.0;
  const double value = parse_double(v, args.context);
  require(value > 0.0, ErrorCode::Domain,
          std::string(key) + " must be > 0 (or 'median'), got '" + std::string(v) + "' in '" +
              std::string(args.context) + "'");
  return value;
}

std::pair<std::string_view, std::string_view> split_head(std::string_view text) {
  text = strip_parens(text);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return {trim(text), {}};
  return {trim(text.substr(0, colon)), trim(text.substr(colon + 1))};
}

}  // namespace

MarginalDist parse_marginal(std::string_view text) {
  const auto [name, body] = split_head(text);
  const Args args = parse_args(body, text);
  if (name == "uniform") {
    return MarginalDist::uniform(parse_double(args.get("a", 0), text),
                                 parse_double(args.get("b", 1), text));
  }
  if (name == "normal") {
    return MarginalDist::normal(parse_double(args.get("mu", 0), text),
                                parse_double(args.get("sd", 1), text));
  }
  raise(ErrorCode::Parse, "unknown marginal '" + std::string(name) + "'");
}

KernelSpec parse_kernel_spec(std::string_view text) {
  const auto [name, body] = split_head(text);
  const Args args = parse_args(body, text);
  if (name == "linear") return KernelSpec::linear();
  if (name == "gaussian") {
    const double sigma = parse_param(args, "sigma", 0);
    return sigma > 0.0 ? KernelSpec::gaussian(sigma) : KernelSpec::gaussian_median();
  }
  if (name == "dirac") return KernelSpec::dirac(parse_int(args.get("levels", 0), text));
  if (name == "sobolev") {
    const int r = args.present("r", 0) ? parse_int(args.get("r", 0), text) : 1;
    std::optional<MarginalDist> marginal;
    if (args.has("marginal")) marginal = parse_marginal(args.get("marginal", 99));
    return KernelSpec::sobolev(r, marginal);
  }
  if (name == "durrande") {
    return KernelSpec::durrande(parse_kernel_spec(args.get("base", 0)),
                                parse_marginal(args.get("marginal", 1)));
  }
  if (name == "stein") {
    ScoreFunction score = normal_score();
    if (args.present("score", 1)) {
      const auto [score_name, score_body] = split_head(args.get("score", 1));
      require(score_name == "normal", ErrorCode::Parse,
              "only normal score functions can be parsed, got '" + std::string(score_name) + "'");
      const Args sargs = parse_args(score_body, text);
      score = normal_score(parse_double(sargs.get("mu", 0), text),
                           parse_double(sargs.get("sd", 1), text));
    }
    return KernelSpec::stein(parse_kernel_spec(args.get("base", 0)), std::move(score));
  }
  if (name == "distribution") {
    const double sigma2 = args.has("sigma2") ? parse_double(args.get("sigma2", 99), text) : 1.0;
    const double lambda = parse_param(args, "lambda", 99);
    const KernelSpec inner = args.has("inner") ? parse_kernel_spec(args.get("inner", 99))
                                               : KernelSpec::gaussian_median();
    return KernelSpec::distribution_embedding(sigma2, lambda, inner);
  }
  if (name == "wasserstein") {
    const double sigma2 = args.has("sigma2") ? parse_double(args.get("sigma2", 99), text) : 1.0;
    return KernelSpec::wasserstein_embedding(sigma2, parse_param(args, "lambda", 99));
  }
  if (name == "alignment") {
    std::optional<int> band;
    if (args.has("band")) band = parse_int(args.get("band", 99), text);
    return KernelSpec::global_alignment(parse_param(args, "bandwidth", 0), band);
  }
  if (name == "product") {
    std::vector<KernelSpec> factors;
    for (std::string_view f : args.positional) factors.push_back(parse_kernel_spec(f));
    return KernelSpec::product_zero_mean(std::move(factors));
  }
  raise(ErrorCode::Parse, "unknown kernel '" + std::string(name) + "'");
}

}  // namespace kgsa
