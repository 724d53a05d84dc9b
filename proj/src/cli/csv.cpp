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

#include "kgsa/cli/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "kgsa/error.hpp"

namespace kgsa::cli {

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& msg) {
  raise(ErrorCode::Parse, "line " + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(value);
}

double number_cell(std::string_view cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  if (!parse_number(cell, v)) {
    parse_error(line, "column '" + column + "': not a finite number: '" + std::string(cell) + "'");
  }
  return v;
}

struct CurveColumn {
  std::size_t index;
  double time;
};

}  // namespace

OutputKind parse_output_kind(std::string_view text) {
  if (text == "scalar") return OutputKind::Scalar;
  if (text == "categorical") return OutputKind::Categorical;
  if (text == "curve") return OutputKind::Curve;
  if (text == "distribution" || text == "dist") return OutputKind::DistSample;
  raise(ErrorCode::Parse, "unknown output kind '" + std::string(text) +
                              "' (expected scalar, categorical, curve or distribution)");
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

SampleSet read_sample_csv(std::istream& in, const CsvSchema& schema) {
  std::string text;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, text)) {
    ++line_no;
    if (!trim(text).empty()) {
      header = split_csv_line(text);
      break;
    }
  }
  if (header.empty()) raise(ErrorCode::Parse, "empty CSV: no header row");
  std::map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) {
    header[c] = std::string(trim(header[c]));
    if (!position.emplace(header[c], c).second) {
      parse_error(line_no, "duplicate column '" + header[c] + "'");
    }
  }

  // Output columns.
  std::set<std::size_t> output_cols;
  std::size_t output_index = 0;
  std::vector<CurveColumn> curve_cols;
  if (schema.output_kind == OutputKind::Curve) {
    const std::string prefix = schema.output_column + "_t";
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c].rfind(prefix, 0) != 0) continue;
      double t = 0.0;
      if (!parse_number(std::string_view(header[c]).substr(prefix.size()), t)) {
        parse_error(line_no, "curve column '" + header[c] + "' has no numeric time suffix");
      }
      curve_cols.push_back({c, t});
      output_cols.insert(c);
    }
    if (curve_cols.empty()) {
      parse_error(line_no, "missing curve columns '" + prefix + "<time>' for output '" +
                               schema.output_column + "'");
    }
    std::sort(curve_cols.begin(), curve_cols.end(),
              [](const CurveColumn& a, const CurveColumn& b) { return a.time < b.time; });
  } else {
    const auto it = position.find(schema.output_column);
    if (it == position.end()) {
      parse_error(line_no, "missing output column '" + schema.output_column + "'");
    }
    output_index = it->second;
    output_cols.insert(output_index);
  }

  // Input columns.
  std::vector<std::size_t> input_cols;
  std::vector<std::string> input_names;
  if (schema.input_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (output_cols.count(c) == 0) {
        input_cols.push_back(c);
        input_names.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : schema.input_columns) {
      const auto it = position.find(name);
      if (it == position.end()) parse_error(line_no, "missing input column '" + name + "'");
      if (output_cols.count(it->second) != 0) {
        parse_error(line_no, "column '" + name + "' is both input and output");
      }
      input_cols.push_back(it->second);
      input_names.push_back(name);
    }
  }
  if (input_cols.empty()) parse_error(line_no, "no input columns");

  std::vector<std::vector<double>> rows;
  SampleSet sample;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(text);
    if (cells.size() != header.size()) {
      parse_error(line_no, "expected " + std::to_string(header.size()) + " cells, found " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(input_cols.size());
    for (std::size_t k = 0; k < input_cols.size(); ++k) {
      row.push_back(number_cell(cells[input_cols[k]], line_no, input_names[k]));
    }
    rows.push_back(std::move(row));
    switch (schema.output_kind) {
      case OutputKind::Scalar:
        sample.outputs.emplace_back(number_cell(cells[output_index], line_no, schema.output_column));
        break;
      case OutputKind::Categorical: {
        const double v = number_cell(cells[output_index], line_no, schema.output_column);
        if (v < 0.0 || v != std::floor(v) || v > 1e9) {
          parse_error(line_no, "column '" + schema.output_column +
                                   "': categorical level must be a non-negative integer");
        }
        sample.outputs.emplace_back(Categorical{static_cast<int>(v)});
        break;
      }
      case OutputKind::DistSample: {
        DistSample bag;
        std::string_view cell = cells[output_index];
        std::size_t start = 0;
        while (start <= cell.size()) {
          const std::size_t end = std::min(cell.find(';', start), cell.size());
          bag.values.push_back(
              number_cell(cell.substr(start, end - start), line_no, schema.output_column));
          start = end + 1;
        }
        sample.outputs.emplace_back(std::move(bag));
        break;
      }
      case OutputKind::Curve: {
        Curve curve;
        for (const auto& cc : curve_cols) {
          curve.times.push_back(cc.time);
          curve.values.push_back(number_cell(cells[cc.index], line_no, header[cc.index]));
        }
        sample.outputs.emplace_back(std::move(curve));
        break;
      }
    }
  }
  if (rows.empty()) raise(ErrorCode::Parse, "CSV has a header but no data rows");
  sample.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(input_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      sample.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  sample.input_names = std::move(input_names);
  sample.output_name = schema.output_column;
  for (const auto& y : sample.outputs) kgsa::validate(y);
  sample.validate();
  return sample;
}

SampleSet read_sample_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return read_sample_csv(in, schema);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.message());
  }
}

void write_sample_csv(std::ostream& out, const SampleSet& sample) {
  sample.validate();
  require(sample.n() > 0, ErrorCode::Domain, "cannot write an empty sample");
  std::vector<std::string> names = sample.input_names;
  if (names.empty()) {
    for (int l = 0; l < sample.d(); ++l) names.push_back("x" + std::to_string(l + 1));
  }
  require(static_cast<int>(names.size()) == sample.d(), ErrorCode::Domain,
          "input name count does not match the sample");
  const OutputValue& first = sample.outputs.front();
  for (const auto& n : names) out << n << ',';
  if (const auto* c = std::get_if<Curve>(&first)) {
    for (std::size_t t = 0; t < c->times.size(); ++t) {
      out << (t ? "," : "") << sample.output_name << "_t" << format_double(c->times[t]);
    }
  } else {
    out << sample.output_name;
  }
  out << '\n';
  for (std::size_t i = 0; i < sample.n(); ++i) {
    for (int l = 0; l < sample.d(); ++l) {
      out << format_double(sample.inputs(static_cast<Eigen::Index>(i), l)) << ',';
    }
    std::visit(
        [&](const auto& y) {
          using T = std::decay_t<decltype(y)>;
          if constexpr (std::is_same_v<T, double>) {
            out << format_double(y);
          } else if constexpr (std::is_same_v<T, Categorical>) {
            out << y.level;
          } else if constexpr (std::is_same_v<T, DistSample>) {
            out << '"';
            for (std::size_t k = 0; k < y.values.size(); ++k) {
              out << (k ? ";" : "") << format_double(y.values[k]);
            }
            out << '"';
          } else {
            require(y.times == std::get<Curve>(first).times, ErrorCode::Domain,
                    "curves must share time points to be written as columns");
            for (std::size_t k = 0; k < y.values.size(); ++k) {
              out << (k ? "," : "") << format_double(y.values[k]);
            }
          }
        },
        sample.outputs[i]);
    out << '\n';
  }
}

}  // namespace kgsa::cli
