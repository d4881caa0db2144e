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

// Laplace-mechanism release of a RACE sketch.
//
// A single point changes exactly one counter per row by 1, so each row is
// released with Lap(1/eps_row) by parallel composition over its W disjoint
// counters, and the R rows compose sequentially. Spending eps/R per row gives
// the per-counter scale R/eps. Counters are floored after the noise is added
// and may go negative.

#ifndef RACE_PRIVACY_HPP_
#define RACE_PRIVACY_HPP_

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>

#include "race/error.hpp"
#include "race/random.hpp"
#include "race/sketch.hpp"

namespace race {

// One-shot epsilon budget for a single sketch release.
class PrivacyBudget {
 public:
  explicit PrivacyBudget(double epsilon) : epsilon_(epsilon) {
    detail::Require(std::isfinite(epsilon) && epsilon > 0.0,
                    ErrorCode::kInvalidParameter, "epsilon must be finite and > 0");
  }

  // Restores a budget record (e.g. from a budget file).
  PrivacyBudget(double epsilon, bool consumed) : PrivacyBudget(epsilon) {
    consumed_ = consumed;
  }

  double epsilon() const { return epsilon_; }
  bool consumed() const { return consumed_; }

  void Consume() {
    if (consumed_) {
      throw Error(ErrorCode::kDoubleRelease, "privacy budget already consumed");
    }
    consumed_ = true;
  }

 private:
  double epsilon_;
  bool consumed_ = false;
};

// Root of the noise stream. The noise on counter (r, j) is a pure function
// of (seed, r, j).
class NoiseSeed {
 public:
  // Unpredictable seed from the OS entropy source. Use this for releases.
  static NoiseSeed FromEntropy() {
    std::random_device device;
    const std::uint64_t hi = device();
    const std::uint64_t lo = device();
    return NoiseSeed((hi << 32) ^ lo, false);
  }

  // NOT PRIVATE: anyone who knows the seed can subtract the noise. For tests
  // and reproducible experiments only.
  static NoiseSeed Deterministic(std::uint64_t seed) { return NoiseSeed(seed, true); }

  // Independent child stream for the index-th of several releases.
  NoiseSeed Fork(std::uint64_t index) const {
    if (!deterministic_) return FromEntropy();
    return NoiseSeed(random::Mix(value_ ^ random::Mix(index + 1)), true);
  }

  std::uint64_t value() const { return value_; }
  bool deterministic() const { return deterministic_; }

 private:
  NoiseSeed(std::uint64_t value, bool deterministic)
      : value_(value), deterministic_(deterministic) {}

  std::uint64_t value_;
  bool deterministic_;
};

// Inverse CDF of the zero-mean Laplace distribution at u in (0, 1).
inline double LaplaceFromUniform(double u, double scale) {
  detail::Require(scale > 0.0, ErrorCode::kInvalidParameter, "Laplace scale must be > 0");
  const double centered = u - 0.5;
  if (centered == 0.0) return 0.0;
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(centered));
  return centered < 0.0 ? -magnitude : magnitude;
}

template <std::uniform_random_bit_generator Rng>
  requires(sizeof(typename Rng::result_type) == 8)
double LaplaceSample(double scale, Rng& rng) {
  return LaplaceFromUniform(random::ToOpenUnit(rng()), scale);
}

// Pre-floor noise added to counter (row, bucket).
inline double CounterNoise(const NoiseSeed& seed, std::uint32_t row,
                           std::uint32_t bucket, double scale) {
  return LaplaceFromUniform(
      random::Uniform(seed.value(), random::Stream::kNoise, {row, bucket}), scale);
}

inline double LaplaceScale(std::uint32_t rows, double epsilon) {
  return static_cast<double>(rows) / epsilon;
}

// Adds Lap(R/eps) to every counter, floors, and freezes the sketch. Consumes
// the budget.
inline RaceSketch Privatize(RaceSketch sketch, PrivacyBudget& budget,
                            const NoiseSeed& seed) {
  if (budget.consumed()) {
    throw Error(ErrorCode::kDoubleRelease, "privacy budget already consumed");
  }
  if (sketch.privatized()) {
    throw Error(ErrorCode::kFrozenSketch, "sketch is already privatized");
  }
  detail::Require(sketch.RowSumsConsistent(), ErrorCode::kInvalidParameter,
                  "rows do not partition the data; refusing to release");
  const double scale = LaplaceScale(sketch.rows(), budget.epsilon());
  auto& counts = detail::SketchAccess::counts(sketch);
  const std::uint32_t width = sketch.range();
  for (std::uint32_t r = 0; r < sketch.rows(); ++r) {
    for (std::uint32_t j = 0; j < width; ++j) {
      auto& c = counts[std::size_t{r} * width + j];
      c = static_cast<std::int64_t>(
          std::floor(static_cast<double>(c) + CounterNoise(seed, r, j, scale)));
    }
  }
  budget.Consume();
  detail::SketchAccess::MarkReleased(sketch, budget.epsilon());
  return sketch;
}

}  // namespace race

#endif  // RACE_PRIVACY_HPP_
