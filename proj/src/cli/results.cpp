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

#include "kgsa/cli/results.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "kgsa/cli/csv.hpp"
#include "kgsa/error.hpp"

namespace kgsa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_table_csv(const fs::path& path, const ReplicateTable& table, const std::string* hash) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path.string() + "'");
  if (hash != nullptr) out << "# config_hash=" << *hash << '\n';
  if (hash != nullptr) out << "replicate,";
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (hash != nullptr) out << r << ',';
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      out << (c ? "," : "") << format_double(table.rows[r][c]);
    }
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace

ColumnSummary summarize(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  ColumnSummary s;
  s.count = v.size();
  if (v.empty()) {
    s.mean = s.std = s.q25 = s.q50 = s.q75 = std::nan("");
    return s;
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  s.q25 = quantile_sorted(v, 0.25);
  s.q50 = quantile_sorted(v, 0.5);
  s.q75 = quantile_sorted(v, 0.75);
  return s;
}

json summary_json(const std::vector<ReplicateTable>& tables) {
  json out = json::object();
  for (const auto& t : tables) {
    json cols = json::object();
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      std::vector<double> col;
      for (const auto& row : t.rows) col.push_back(row[c]);
      const ColumnSummary s = summarize(col);
      cols[t.columns[c]] = {{"count", s.count},     {"mean", number(s.mean)},
                            {"std", number(s.std)}, {"q25", number(s.q25)},
                            {"q50", number(s.q50)}, {"q75", number(s.q75)}};
    }
    out[t.name] = std::move(cols);
  }
  return out;
}

json results_json(const RunResult& result, const std::string& timestamp) {
  std::size_t reps = 0;
  for (const auto& t : result.tables) reps = std::max(reps, t.rows.size());
  json replicates = json::array();
  for (std::size_t r = 0; r < reps; ++r) {
    json rec = {{"replicate", r}, {"seed", replicate_seed(result.seed, r)}};
    for (const auto& t : result.tables) {
      if (r >= t.rows.size()) continue;
      json row = json::object();
      for (std::size_t c = 0; c < t.columns.size(); ++c) row[t.columns[c]] = number(t.rows[r][c]);
      rec[t.name] = std::move(row);
    }
    if (r < result.replicate_extras.size() && result.replicate_extras[r].is_object()) {
      rec.update(result.replicate_extras[r]);
    }
    replicates.push_back(std::move(rec));
  }
  return {{"config_hash", result.config_hash},
          {"seed", result.seed},
          {"replicates", std::move(replicates)},
          {"summary", summary_json(result.tables)},
          {"eval_counts", result.eval_counts},
          {"degenerate", result.degenerate},
          {"timestamp", timestamp}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_results(const RunResult& result, const std::string& out_dir, bool force) {
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create '" + out_dir + "': " + ec.message());
  const fs::path results = dir / "results.json";
  if (fs::exists(results) && !force) {
    std::ifstream in(results);
    const json old = json::parse(in, nullptr, false);
    const std::string old_hash =
        old.is_object() && old.contains("config_hash") && old["config_hash"].is_string()
            ? old["config_hash"].get<std::string>()
            : std::string("<unreadable>");
    require(old_hash == result.config_hash, ErrorCode::Io,
            "'" + results.string() + "' holds results of another configuration (config_hash " +
                old_hash + ", this run " + result.config_hash + "); use --force to overwrite");
  }
  for (const auto& t : result.tables) write_table_csv(dir / (t.name + ".csv"), t, &result.config_hash);
  for (const auto& t : result.artifacts) write_table_csv(dir / (t.name + ".csv"), t, nullptr);
  std::ofstream out(results);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + results.string() + "'");
  out << results_json(result, utc_timestamp()).dump(2) << '\n';
}

}  // namespace kgsa::cli
