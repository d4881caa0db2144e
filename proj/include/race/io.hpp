//
// Copyright 2026 The RACE Sketch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Dense datasets, CSV ingestion and the unit-sphere / unit-cube transforms.

#ifndef RACE_IO_HPP_
#define RACE_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "race/error.hpp"

namespace race {

enum class ScaleMode : std::uint8_t { kNone = 0, kUnitSphere = 1, kUnitCube = 2 };

// Parameters of a fitted transform. UnitCube stores per-feature min/max;
// UnitSphere normalizes every point by its own norm and stores nothing.
struct ScaleParams {
  ScaleMode mode = ScaleMode::kNone;
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};

// N x d row-major matrix of reals.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dim) : dim_(dim) {}
  Dataset(std::size_t dim, std::vector<double> values)
      : dim_(dim), values_(std::move(values)) {
    detail::Require(dim_ > 0 && values_.size() % dim_ == 0,
                    ErrorCode::kDimensionMismatch,
                    "value count is not a multiple of the dimension");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const { return size() == 0; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  std::span<double> row(std::size_t i) {
    return std::span<double>(values_).subspan(i * dim_, dim_);
  }

  void Append(std::span<const double> point) {
    detail::RequireDim(point.size(), dim_);
    values_.insert(values_.end(), point.begin(), point.end());
  }

  const std::vector<double>& values() const { return values_; }
  const ScaleParams& scaling() const { return scaling_; }
  void set_scaling(ScaleParams params) { scaling_ = std::move(params); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  ScaleParams scaling_;
};

// ---------------------------------------------------------------------------
// Transforms

inline std::vector<double> ApplyTransform(const ScaleParams& params,
                                          std::span<const double> point) {
  std::vector<double> out(point.begin(), point.end());
  switch (params.mode) {
    case ScaleMode::kNone:
      break;
    case ScaleMode::kUnitSphere: {
      double norm2 = 0.0;
      for (double v : out) norm2 += v * v;
      if (norm2 == 0.0) {
        throw Error(ErrorCode::kZeroRow, "cannot project a zero row onto the unit sphere");
      }
      const double norm = std::sqrt(norm2);
      for (double& v : out) v /= norm;
      break;
    }
    case ScaleMode::kUnitCube:
      detail::RequireDim(point.size(), params.min.size());
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double span = params.max[j] - params.min[j];
        out[j] = span > 0.0 ? (out[j] - params.min[j]) / span : 0.5;
      }
      break;
  }
  return out;
}

// Fits the transform for `mode` on `data`.
inline ScaleParams FitScale(const Dataset& data, ScaleMode mode) {
  ScaleParams params;
  params.mode = mode;
  if (mode != ScaleMode::kUnitCube) return params;
  params.min.assign(data.dim(), std::numeric_limits<double>::infinity());
  params.max.assign(data.dim(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < data.dim(); ++j) {
      params.min[j] = std::min(params.min[j], row[j]);
      params.max[j] = std::max(params.max[j], row[j]);
    }
  }
  if (data.empty()) {
    params.min.assign(data.dim(), 0.0);
    params.max.assign(data.dim(), 0.0);
  }
  return params;
}

inline Dataset Scale(const Dataset& data, ScaleMode mode) {
  ScaleParams params = FitScale(data, mode);
  Dataset out(data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.Append(ApplyTransform(params, data.row(i)));
  }
  out.set_scaling(std::move(params));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvOptions {
  bool header = false;
  char delimiter = ',';
  // Column holding a label or regression target, 0-based; -1 selects the
  // last column. Unset means every column is a feature.
  std::optional<int> label_column;
};

namespace detail {

inline std::string Location(std::size_t line, std::size_t column) {
  return "at row " + std::to_string(line) + ", column " + std::to_string(column);
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double ParseReal(std::string_view field, std::size_t line, std::size_t column) {
  field = Trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kParse, "cannot parse '" + std::string(field) + "' " +
                                       Location(line, column));
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kNonFinite, "non-finite value " + Location(line, column));
  }
  return value;
}

}  // namespace detail

// Row-at-a-time CSV reader; the file is never held in memory.
class CsvReader {
 public:
  CsvReader(std::istream& in, CsvOptions options)
      : in_(in), options_(std::move(options)) {
    if (options_.header) {
      std::string ignored;
      if (std::getline(in_, ignored)) ++line_;
    }
  }

  // Reads the next non-empty row. Returns false at end of input.
  bool Next(std::vector<double>& features, std::string* label = nullptr) {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (detail::Trim(text).empty()) continue;
      std::vector<std::string_view> fields;
      std::string_view rest(text);
      while (true) {
        const auto pos = rest.find(options_.delimiter);
        fields.push_back(rest.substr(0, pos));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
      }
      if (arity_ == 0) arity_ = fields.size();
      if (fields.size() != arity_) {
        throw Error(ErrorCode::kRaggedRow,
                    "row " + std::to_string(line_) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(arity_));
      }
      std::optional<std::size_t> label_at;
      if (options_.label_column) {
        const int c = *options_.label_column;
        label_at = c < 0 ? arity_ - 1 : static_cast<std::size_t>(c);
        if (*label_at >= arity_) {
          throw Error(ErrorCode::kInvalidParameter, "label column out of range");
        }
      }
      features.clear();
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (label_at && c == *label_at) {
          if (label != nullptr) *label = std::string(detail::Trim(fields[c]));
          continue;
        }
        features.push_back(detail::ParseReal(fields[c], line_, c + 1));
      }
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  CsvOptions options_;
  std::size_t line_ = 0;
  std::size_t arity_ = 0;
};

struct CsvTable {
  Dataset data;
  std::vector<std::string> labels;  // empty unless a label column is set
};

inline CsvTable ReadCsv(std::istream& in, const CsvOptions& options = {}) {
  CsvReader reader(in, options);
  CsvTable table;
  std::vector<double> features;
  std::string label;
  bool first = true;
  while (reader.Next(features, options.label_column ? &label : nullptr)) {
    if (first) {
      detail::Require(!features.empty(), ErrorCode::kParse, "row has no feature columns");
      table.data = Dataset(features.size());
      first = false;
    }
    table.data.Append(features);
    if (options.label_column) table.labels.push_back(label);
  }
  return table;
}

inline CsvTable LoadCsv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return ReadCsv(in, options);
}

// Shortest representation that parses back to the identical double.
inline std::string FormatReal(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void WriteCsv(std::ostream& out, const Dataset& data, char delimiter = ',') {
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << delimiter;
      out << FormatReal(row[j]);
    }
    out << '\n';
  }
}

// Parses label strings as finite reals (regression targets).
inline std::vector<double> ParseTargets(const std::vector<std::string>& labels) {
  std::vector<double> targets;
  targets.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    targets.push_back(detail::ParseReal(labels[i], i + 1, 0));
  }
  return targets;
}

}  // namespace race

#endif  // RACE_IO_HPP_
