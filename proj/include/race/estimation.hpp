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

// Query-side estimators over a (clean or privatized) sketch.
//
// Every row r gives an unbiased estimate S[r, l_r(q)] of the kernel sum
// f_D(q) = sum_x k(x, q), with variance at most (sum_x sqrt(k(x, q)))^2 before
// noise and an extra 2 R^2 / eps^2 after noise. The mean over rows is the
// plain estimator; median-of-means over k = ceil(8 ln(1/delta)) groups gives
// the high-probability bound implemented in ErrorBound().

#ifndef RACE_ESTIMATION_HPP_
#define RACE_ESTIMATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "race/error.hpp"
#include "race/io.hpp"
#include "race/lsh.hpp"
#include "race/sketch.hpp"

namespace race {

enum class Estimator : std::uint8_t { kMean, kMedianOfMeans };

// Density normalization never divides by less than this.
inline constexpr double kSizeFloor = 1.0;

struct QueryEstimate {
  double f_hat = 0.0;  // kernel sum estimate, may be negative after noise
  double n_hat = 0.0;  // dataset size estimate
  double kde = 0.0;    // f_hat / max(n_hat, kSizeFloor), clamped at 0
  std::vector<double> row_values;
};

// N-hat: total counter mass divided by R.
inline double EstimateSize(const RaceSketch& sketch) {
  long double total = 0.0L;
  for (std::int64_t c : sketch.counts()) total += static_cast<long double>(c);
  return static_cast<double>(total / sketch.rows());
}

inline std::vector<double> RowValues(const RaceSketch& sketch, std::span<const double> q) {
  std::vector<double> values(sketch.rows());
  sketch.hashes().ForEachBucket(q, [&](std::uint32_t r, std::uint32_t j) {
    values[r] = static_cast<double>(sketch.count(r, j));
  });
  return values;
}

inline double Normalize(double f_hat, double n_hat) {
  return std::max(0.0, f_hat / std::max(n_hat, kSizeFloor));
}

inline double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

// Median with the even-count rule: mean of the two central values.
inline double Median(std::vector<double> values) {
  detail::Require(!values.empty(), ErrorCode::kInvalidParameter, "median of nothing");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

// k = ceil(8 ln(1/delta)), at least 1. The small slack absorbs rounding so
// that e.g. delta = exp(-1/4) yields exactly 2 groups.
inline std::uint32_t GroupCount(double delta) {
  detail::Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidParameter,
                  "delta must be in (0, 1)");
  const double k = std::ceil(8.0 * std::log(1.0 / delta) - 1e-9);
  return static_cast<std::uint32_t>(std::max(1.0, k));
}

// Median of k contiguous group means of m = floor(R/k) values each; values
// past k*m are ignored.
inline double MedianOfMeans(std::span<const double> values, std::uint32_t groups) {
  if (groups == 0 || values.size() < groups) {
    throw Error(ErrorCode::kInsufficientRows,
                "need at least " + std::to_string(groups) + " rows, have " +
                    std::to_string(values.size()));
  }
  const std::size_t m = values.size() / groups;
  std::vector<double> means(groups);
  for (std::uint32_t g = 0; g < groups; ++g) {
    means[g] = Mean(values.subspan(g * m, m));
  }
  return Median(std::move(means));
}

inline QueryEstimate QueryMean(const RaceSketch& sketch, std::span<const double> q) {
  QueryEstimate est;
  est.row_values = RowValues(sketch, q);
  est.f_hat = Mean(est.row_values);
  est.n_hat = EstimateSize(sketch);
  est.kde = Normalize(est.f_hat, est.n_hat);
  return est;
}

inline QueryEstimate QueryMedianOfMeansGroups(const RaceSketch& sketch,
                                              std::span<const double> q,
                                              std::uint32_t groups) {
  if (sketch.rows() < groups) {
    throw Error(ErrorCode::kInsufficientRows,
                "sketch has " + std::to_string(sketch.rows()) + " rows, need " +
                    std::to_string(groups));
  }
  QueryEstimate est;
  est.row_values = RowValues(sketch, q);
  est.f_hat = MedianOfMeans(est.row_values, groups);
  est.n_hat = EstimateSize(sketch);
  est.kde = Normalize(est.f_hat, est.n_hat);
  return est;
}

inline QueryEstimate QueryMedianOfMeans(const RaceSketch& sketch,
                                        std::span<const double> q, double delta) {
  return QueryMedianOfMeansGroups(sketch, q, GroupCount(delta));
}

inline QueryEstimate Query(const RaceSketch& sketch, std::span<const double> q,
                           Estimator estimator, double delta = 0.1) {
  return estimator == Estimator::kMean ? QueryMean(sketch, q)
                                       : QueryMedianOfMeans(sketch, q, delta);
}

// With probability 1 - delta the median-of-means error of an eps-private
// sketch with R rows is at most sqrt((f~^2 / R + 2 R / eps^2) * 32 ln(1/delta)).
// R is real-valued so the bound can be evaluated at its continuous optimum.
inline double ErrorBound(double f_tilde, double rows, double epsilon, double delta) {
  detail::Require(f_tilde >= 0.0 && std::isfinite(f_tilde),
                  ErrorCode::kInvalidParameter, "f_tilde must be >= 0");
  detail::Require(rows > 0.0 && epsilon > 0.0, ErrorCode::kInvalidParameter,
                  "rows and epsilon must be > 0");
  detail::Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidParameter,
                  "delta must be in (0, 1)");
  const double variance = f_tilde * f_tilde / rows + 2.0 * rows / (epsilon * epsilon);
  return std::sqrt(variance * 32.0 * std::log(1.0 / delta));
}

// R = ceil(f~ eps / sqrt 2), at least 1. Pass N when f~ is unknown (f~ <= N).
inline std::uint32_t OptimalRows(double f_tilde_or_n, double epsilon) {
  detail::Require(f_tilde_or_n > 0.0 && epsilon > 0.0, ErrorCode::kInvalidParameter,
                  "inputs must be > 0");
  const double r = std::ceil(f_tilde_or_n * epsilon / std::numbers::sqrt2);
  if (!(r < static_cast<double>(std::numeric_limits<std::uint32_t>::max()))) {
    throw Error(ErrorCode::kInvalidParameter, "optimal row count overflows");
  }
  return static_cast<std::uint32_t>(std::max(1.0, r));
}

// f~_D(q) = sum_x sqrt(k(x, q)). Needs the raw data; for planning and tests.
inline double FTilde(const Dataset& data, std::span<const double> q,
                     const LshFamily& family) {
  detail::RequireDim(q.size(), family.dim);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum += std::sqrt(CollisionProbability(family, data.row(i), q));
  }
  return sum;
}

}  // namespace race

#endif  // RACE_ESTIMATION_HPP_
