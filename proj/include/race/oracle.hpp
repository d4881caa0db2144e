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

// Brute-force reference computations for tests and expected-value generation.
// Nothing in the sketch or query path calls into this header.
//
// The Monte-Carlo collision oracle deliberately draws its hash functions
// from std::mt19937_64 and the standard distributions rather than from the
// library's counter-based streams, so it shares no code with RowHasher.

#ifndef RACE_ORACLE_HPP_
#define RACE_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "race/error.hpp"
#include "race/io.hpp"
#include "race/lsh.hpp"

namespace race::oracle {

struct OracleResult {
  double value = 0.0;
  std::uint64_t trials = 1;
  double std_err = 0.0;
};

// f_D(q) = sum_x k(x, q), computed exactly in O(dN).
inline OracleResult ExactKernelSum(const Dataset& data, std::span<const double> q,
                                   const LshFamily& family) {
  detail::RequireDim(q.size(), family.dim);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum += CollisionProbability(family, data.row(i), q);
  }
  return OracleResult{sum, 1, 0.0};
}

// Fraction of freshly drawn raw hash functions under which x and y collide.
inline OracleResult MonteCarloCollision(const LshFamily& family, std::span<const double> x,
                                        std::span<const double> y, std::uint64_t trials,
                                        std::uint64_t seed) {
  detail::Require(trials >= 1, ErrorCode::kInvalidParameter, "trials must be >= 1");
  detail::RequireDim(x.size(), family.dim);
  detail::RequireDim(y.size(), family.dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool pstable = family.kind == LshKind::kEuclideanPStable;

  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    bool collide = true;
    for (std::uint32_t i = 0; i < family.depth; ++i) {
      double px = 0.0;
      double py = 0.0;
      for (std::uint32_t j = 0; j < family.dim; ++j) {
        const double g = gauss(rng);
        px += g * x[j];
        py += g * y[j];
      }
      if (pstable) {
        const double b = unit(rng) * family.bandwidth;
        collide &= std::floor((px + b) / family.bandwidth) ==
                   std::floor((py + b) / family.bandwidth);
      } else {
        collide &= (px >= 0.0) == (py >= 0.0);
      }
    }
    hits += collide ? 1 : 0;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return OracleResult{p, trials, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

struct ExactClassification {
  std::size_t index = 0;
  std::vector<double> kde;  // f_D(q) / N per class
};

// Maximum-likelihood decision on exact class densities; ties to lowest index.
inline ExactClassification ExactKdeClassify(const std::vector<Dataset>& classes,
                                            std::span<const double> q,
                                            const LshFamily& family) {
  ExactClassification out;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double n = static_cast<double>(classes[c].size());
    const double kde = n > 0 ? ExactKernelSum(classes[c], q, family).value / n : 0.0;
    out.kde.push_back(kde);
    if (kde > best) {
      best = kde;
      out.index = c;
    }
  }
  return out;
}

// Exact surrogate regression loss for data already mapped to the scaled
// space: sum_i k(z+_i, q) + k(z-_i, q) with z+_i = [x_i, y_i] and
// q = [theta, -1]. With `intercept`, z+_i = [x_i, 1, y_i] and params carries
// the intercept last.
inline OracleResult ExactSurrogateLoss(const Dataset& scaled_x,
                                       std::span<const double> scaled_y,
                                       std::span<const double> params,
                                       std::uint32_t depth, bool intercept = false) {
  const std::size_t width = scaled_x.dim() + (intercept ? 1 : 0);
  detail::RequireDim(params.size(), width);
  detail::RequireDim(scaled_y.size(), scaled_x.size());
  const auto dim = static_cast<std::uint32_t>(width + 1);
  const LshFamily family = NewFamily(LshKind::kSrp, dim, depth, 1.0, 2, 0);
  std::vector<double> q(params.begin(), params.end());
  q.push_back(-1.0);
  std::vector<double> plus(dim), minus(dim);
  double sum = 0.0;
  for (std::size_t i = 0; i < scaled_x.size(); ++i) {
    auto row = scaled_x.row(i);
    std::copy(row.begin(), row.end(), plus.begin());
    if (intercept) plus[dim - 2] = 1.0;
    plus[dim - 1] = scaled_y[i];
    for (std::size_t j = 0; j < dim; ++j) minus[j] = -plus[j];
    sum += CollisionProbability(family, plus, q) + CollisionProbability(family, minus, q);
  }
  return OracleResult{sum, 1, 0.0};
}

}  // namespace race::oracle

#endif  // RACE_ORACLE_HPP_
