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

// Derivative-free minimization for sketch-defined objectives. Sketch queries
// are piecewise constant in the query point, so there is no gradient to use.

#ifndef RACE_OPTIMIZE_HPP_
#define RACE_OPTIMIZE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "race/error.hpp"

namespace race {

struct OptimizerConfig {
  std::uint32_t max_iters = 400;  // per Nelder-Mead run
  double simplex_scale = 0.5;     // initial edge length
  std::uint32_t restarts = 3;     // extra runs from the incumbent
  double tolerance = 1e-6;        // on the spread of simplex values
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  // Best value after each iteration; nonincreasing.
  std::vector<double> trace;
  std::uint64_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

namespace detail {

class Incumbent {
 public:
  Incumbent(const Objective& f, std::vector<double> x0, OptimizeResult& result)
      : f_(f), result_(result) {
    result_.x = std::move(x0);
    result_.value = Eval(result_.x);
    result_.trace.push_back(result_.value);
  }

  double Eval(std::span<const double> x) {
    ++result_.evaluations;
    const double v = f_(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  // Accepts strict improvements only, so a flat objective never moves.
  void Offer(std::span<const double> x, double value) {
    if (value < result_.value) {
      result_.x.assign(x.begin(), x.end());
      result_.value = value;
    }
  }

  void Tick() { result_.trace.push_back(result_.value); }

  const std::vector<double>& x() const { return result_.x; }
  double value() const { return result_.value; }

 private:
  const Objective& f_;
  OptimizeResult& result_;
};

inline void NelderMeadRun(Incumbent& inc, const OptimizerConfig& config, double scale) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  const std::size_t n = inc.x().size();
  std::vector<std::vector<double>> simplex(n + 1, inc.x());
  std::vector<double> values(n + 1, inc.value());
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += scale;
    values[i + 1] = inc.Eval(simplex[i + 1]);
    inc.Offer(simplex[i + 1], values[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), second(n);
  auto point_along = [&](double t, const std::vector<double>& from, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + t * (from[i] - centroid[i]);
  };

  for (std::uint32_t iter = 0; iter < config.max_iters; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t next_worst = order[n - 1];

    double diameter = 0.0;
    for (std::size_t v = 0; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i) {
        diameter = std::max(diameter, std::abs(simplex[v][i] - simplex[best][i]));
      }
    }
    if (std::abs(values[worst] - values[best]) <= config.tolerance || diameter < 1e-12) {
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i] / static_cast<double>(n);
    }

    point_along(-kReflect, simplex[worst], trial);
    const double reflected = inc.Eval(trial);
    if (reflected < values[best]) {
      point_along(-kExpand, simplex[worst], second);
      const double expanded = inc.Eval(second);
      if (expanded < reflected) {
        simplex[worst] = second;
        values[worst] = expanded;
      } else {
        simplex[worst] = trial;
        values[worst] = reflected;
      }
    } else if (reflected < values[next_worst]) {
      simplex[worst] = trial;
      values[worst] = reflected;
    } else {
      const bool outside = reflected < values[worst];
      point_along(outside ? -kContract : kContract, simplex[worst], second);
      const double contracted = inc.Eval(second);
      if (contracted < (outside ? reflected : values[worst])) {
        simplex[worst] = second;
        values[worst] = contracted;
      } else {
        for (std::size_t v = 0; v <= n; ++v) {
          if (v == best) continue;
          for (std::size_t i = 0; i < n; ++i) {
            simplex[v][i] = simplex[best][i] + kShrink * (simplex[v][i] - simplex[best][i]);
          }
          values[v] = inc.Eval(simplex[v]);
        }
      }
    }
    for (std::size_t v = 0; v <= n; ++v) inc.Offer(simplex[v], values[v]);
    inc.Tick();
  }
}

// Compass search with step halving.
inline void CoordinateSearch(Incumbent& inc, const OptimizerConfig& config) {
  const std::size_t n = inc.x().size();
  double step = config.simplex_scale;
  std::vector<double> probe;
  for (std::uint32_t iter = 0; iter < config.max_iters && step > config.tolerance; ++iter) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (double sign : {1.0, -1.0}) {
        probe = inc.x();
        probe[i] += sign * step;
        const double v = inc.Eval(probe);
        if (v < inc.value()) {
          inc.Offer(probe, v);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    inc.Tick();
  }
}

}  // namespace detail

// Nelder-Mead from x0, restarted `restarts` times from the incumbent with a
// fresh simplex; falls back to coordinate search when the simplex phase finds
// nothing better than x0. Throws kOptimizerDivergence when no finite value
// is ever observed.
inline OptimizeResult Minimize(const Objective& f, std::vector<double> x0,
                               const OptimizerConfig& config = {}) {
  detail::Require(!x0.empty(), ErrorCode::kInvalidParameter, "cannot optimize in 0 dimensions");
  detail::Require(config.simplex_scale > 0.0 && config.tolerance >= 0.0,
                  ErrorCode::kInvalidParameter, "invalid optimizer configuration");
  OptimizeResult result;
  detail::Incumbent inc(f, std::move(x0), result);
  const double initial = inc.value();
  for (std::uint32_t run = 0; run <= config.restarts; ++run) {
    detail::NelderMeadRun(inc, config, config.simplex_scale);
  }
  if (!(inc.value() < initial)) detail::CoordinateSearch(inc, config);
  if (!std::isfinite(result.value)) {
    throw Error(ErrorCode::kOptimizerDivergence, "objective never returned a finite value");
  }
  return result;
}

}  // namespace race

#endif  // RACE_OPTIMIZE_HPP_
