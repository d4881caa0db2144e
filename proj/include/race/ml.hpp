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

// Learning tasks answered from released sketches: kernel density
// classification, anomaly scoring, surrogate-loss linear regression and mode
// finding. Everything here is post-processing of private sketches and costs
// no additional budget.

#ifndef RACE_ML_HPP_
#define RACE_ML_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "race/error.hpp"
#include "race/estimation.hpp"
#include "race/io.hpp"
#include "race/lsh.hpp"
#include "race/optimize.hpp"
#include "race/privacy.hpp"
#include "race/sketch.hpp"

namespace race {

// ---------------------------------------------------------------------------
// Classification

enum class DecisionRule : std::uint8_t { kMaxLikelihood, kMaxPosterior };

struct ClassScore {
  double kde = 0.0;
  double n_hat = 0.0;
};

// One private sketch per class over a shared hash bank. Classes partition the
// training data, so each class sketch is released with the full epsilon.
class Classifier {
 public:
  Classifier(std::vector<std::string> labels, std::vector<RaceSketch> sketches,
             double delta = 0.1)
      : labels_(std::move(labels)), sketches_(std::move(sketches)), delta_(delta) {
    detail::Require(labels_.size() >= 2, ErrorCode::kInvalidParameter,
                    "a classifier needs at least two classes");
    detail::Require(labels_.size() == sketches_.size(), ErrorCode::kInvalidParameter,
                    "exactly one sketch per class label");
    groups_ = GroupCount(delta_);
    for (const auto& s : sketches_) {
      if (!(s.family() == sketches_.front().family()) ||
          s.rows() != sketches_.front().rows()) {
        throw Error(ErrorCode::kIncompatibleSketch,
                    "class sketches must share family and shape");
      }
      n_hat_.push_back(EstimateSize(s));
    }
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<RaceSketch>& sketches() const { return sketches_; }
  double delta() const { return delta_; }
  std::uint32_t dim() const { return sketches_.front().family().dim; }

  // Per-class median-of-means density estimates at q.
  std::vector<ClassScore> Scores(std::span<const double> q) const {
    detail::RequireDim(q.size(), dim());
    // All class sketches hash identically; compute buckets once.
    const auto& bank = sketches_.front().hashes();
    std::vector<std::uint32_t> buckets(bank.rows());
    bank.ForEachBucket(q, [&](std::uint32_t r, std::uint32_t j) { buckets[r] = j; });

    std::vector<ClassScore> scores(sketches_.size());
    std::vector<double> values(bank.rows());
    for (std::size_t c = 0; c < sketches_.size(); ++c) {
      for (std::uint32_t r = 0; r < bank.rows(); ++r) {
        values[r] = static_cast<double>(sketches_[c].count(r, buckets[r]));
      }
      const double f_hat = MedianOfMeans(values, groups_);
      scores[c] = ClassScore{Normalize(f_hat, n_hat_[c]), n_hat_[c]};
    }
    return scores;
  }

  // Index of the winning class; ties go to the lowest index.
  std::size_t Predict(std::span<const double> q,
                      DecisionRule rule = DecisionRule::kMaxLikelihood) const {
    return Decide(Scores(q), rule);
  }

  const std::string& Classify(std::span<const double> q,
                              DecisionRule rule = DecisionRule::kMaxLikelihood) const {
    return labels_[Predict(q, rule)];
  }

  // MAP weights each likelihood by the prior n_hat_i / sum_j n_hat_j; the
  // common denominator drops out of the argmax.
  static std::size_t Decide(const std::vector<ClassScore>& scores, DecisionRule rule) {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.size(); ++c) {
      const double v = rule == DecisionRule::kMaxLikelihood
                           ? scores[c].kde
                           : std::max(scores[c].n_hat, 0.0) * scores[c].kde;
      if (v > best_value) {
        best = c;
        best_value = v;
      }
    }
    return best;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<RaceSketch> sketches_;
  double delta_;
  std::uint32_t groups_ = 1;
  std::vector<double> n_hat_;
};

struct LabeledData {
  std::string label;
  Dataset data;
};

// Builds and privatizes one sketch per class. `budgets` receives the consumed
// per-class budgets.
inline Classifier TrainClassifier(const std::vector<LabeledData>& classes,
                                  const LshFamily& family, std::uint32_t rows,
                                  double epsilon, const NoiseSeed& noise,
                                  double delta = 0.1,
                                  std::vector<PrivacyBudget>* budgets = nullptr) {
  detail::Require(classes.size() >= 2, ErrorCode::kInvalidParameter,
                  "a classifier needs at least two classes");
  auto bank = std::make_shared<const HashBank>(family, rows);
  std::vector<std::string> labels;
  std::vector<RaceSketch> sketches;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& cls = classes[c];
    if (cls.data.empty()) {
      throw Error(ErrorCode::kEmptyClass, "class '" + cls.label + "' has no points");
    }
    detail::RequireDim(cls.data.dim(), family.dim);
    RaceSketch sketch(bank);
    for (std::size_t i = 0; i < cls.data.size(); ++i) sketch.Add(cls.data.row(i));
    PrivacyBudget budget(epsilon);
    sketches.push_back(Privatize(std::move(sketch), budget, noise.Fork(c)));
    if (budgets != nullptr) budgets->push_back(budget);
    labels.push_back(cls.label);
  }
  return Classifier(std::move(labels), std::move(sketches), delta);
}

// ---------------------------------------------------------------------------
// Anomaly detection

inline double AnomalyScore(const RaceSketch& sketch, std::span<const double> q,
                           double delta = 0.1) {
  return QueryMedianOfMeans(sketch, q, delta).kde;
}

// Low estimated density marks an outlier. A zero threshold never fires since
// scores are clamped at 0.
inline bool IsAnomaly(const RaceSketch& sketch, std::span<const double> q,
                      double threshold, double delta = 0.1) {
  detail::Require(threshold >= 0.0, ErrorCode::kInvalidParameter, "threshold must be >= 0");
  return AnomalyScore(sketch, q, delta) < threshold;
}

// ---------------------------------------------------------------------------
// Linear regression through the SRP surrogate loss
//
// Each training pair contributes z+ = [x, y] and z- = -z+. For
// q = [theta, -1] / ||.|| the sketch estimates sum_i (1 - a_i/pi)^p + (a_i/pi)^p
// where a_i is the angle between z_i and q; every term is minimized when the
// residual <x_i, theta> - y_i is zero. With fit_intercept a constant 1 is
// appended to x, so z+ = [x, 1, y] and q = [theta, b, -1].

struct RegressionConfig {
  std::uint32_t depth = 4;
  std::uint32_t rows = 1000;
  std::uint32_t range = 100;
  double epsilon = 1.0;
  std::uint64_t seed = 0;
  bool fit_intercept = false;
  OptimizerConfig optimizer;
};

// Per-column affine map onto [-1, 1]; constant columns map to 0.
struct SymmetricScaler {
  std::vector<double> min;
  std::vector<double> max;

  static SymmetricScaler Fit(const Dataset& data) {
    ScaleParams p = FitScale(data, ScaleMode::kUnitCube);
    return SymmetricScaler{std::move(p.min), std::move(p.max)};
  }

  double Gain(std::size_t j) const {
    const double span = max[j] - min[j];
    return span > 0.0 ? 2.0 / span : 0.0;
  }
  double Offset(std::size_t j) const {
    const double span = max[j] - min[j];
    return span > 0.0 ? -2.0 * min[j] / span - 1.0 : 0.0;
  }
  double Apply(std::size_t j, double v) const { return Gain(j) * v + Offset(j); }
};

struct RegressionModel {
  std::vector<double> theta;  // original units
  double intercept = 0.0;
  std::vector<double> scaled_theta;  // in [-1, 1]-scaled coordinates
  double scaled_intercept = 0.0;
  SymmetricScaler feature_scaler;
  SymmetricScaler target_scaler;
  std::shared_ptr<const RaceSketch> sketch;
  std::vector<double> trace;

  double Predict(std::span<const double> x) const {
    detail::RequireDim(x.size(), theta.size());
    double y = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) y += theta[j] * x[j];
    return y;
  }
};

// Unit query direction [params, -1] / ||.||.
inline std::vector<double> SurrogateQuery(std::span<const double> params) {
  std::vector<double> q(params.begin(), params.end());
  q.push_back(-1.0);
  const double norm = detail::Norm(q);
  for (double& v : q) v /= norm;
  return q;
}

// Sketched surrogate loss at params = theta or [theta, intercept] (scaled space).
inline double SurrogateLoss(const RaceSketch& sketch, std::span<const double> params) {
  return QueryMean(sketch, SurrogateQuery(params)).f_hat;
}

inline void AddRegressionPair(RaceSketch& sketch, std::span<const double> scaled_x,
                              double scaled_y, bool intercept = false) {
  std::vector<double> augmented(scaled_x.begin(), scaled_x.end());
  if (intercept) augmented.push_back(1.0);
  const auto pair = AsymmetricPairTransform(augmented, scaled_y);
  sketch.Add(pair.plus);
  sketch.Add(pair.minus);
}

// Recovers original-unit coefficients from scaled-space ones.
inline void Unscale(RegressionModel& model) {
  const auto& fx = model.feature_scaler;
  const auto& fy = model.target_scaler;
  const double half_range = 0.5 * (fy.max[0] - fy.min[0]);
  model.theta.assign(model.scaled_theta.size(), 0.0);
  double inner = model.scaled_intercept;
  for (std::size_t j = 0; j < model.scaled_theta.size(); ++j) {
    model.theta[j] = half_range * model.scaled_theta[j] * fx.Gain(j);
    inner += model.scaled_theta[j] * fx.Offset(j);
  }
  model.intercept = half_range > 0.0 ? half_range * (inner + 1.0) + fy.min[0] : fy.min[0];
  if (!(half_range > 0.0)) std::fill(model.theta.begin(), model.theta.end(), 0.0);
}

inline RegressionModel FitRegression(const Dataset& features,
                                     std::span<const double> targets,
                                     const RegressionConfig& config,
                                     const NoiseSeed& noise) {
  detail::Require(config.depth >= 2, ErrorCode::kInvalidParameter,
                  "regression needs SRP depth >= 2");
  detail::Require(!features.empty(), ErrorCode::kInvalidParameter, "no training data");
  detail::RequireDim(targets.size(), features.size());
  for (double y : targets) {
    detail::Require(std::isfinite(y), ErrorCode::kNonFinite, "non-finite regression target");
  }

  RegressionModel model;
  model.feature_scaler = SymmetricScaler::Fit(features);
  model.target_scaler = SymmetricScaler::Fit(Dataset(1, {targets.begin(), targets.end()}));

  const std::size_t d = features.dim();
  const std::size_t params = d + (config.fit_intercept ? 1 : 0);
  const LshFamily family =
      NewFamily(LshKind::kAsymmetricSrp, static_cast<std::uint32_t>(params + 1), config.depth,
                1.0, config.range, config.seed);
  RaceSketch sketch(family, config.rows);
  std::vector<double> scaled(d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto row = features.row(i);
    for (std::size_t j = 0; j < d; ++j) scaled[j] = model.feature_scaler.Apply(j, row[j]);
    AddRegressionPair(sketch, scaled, model.target_scaler.Apply(0, targets[i]),
                      config.fit_intercept);
  }
  PrivacyBudget budget(config.epsilon);
  auto released = std::make_shared<const RaceSketch>(Privatize(std::move(sketch), budget, noise));

  const auto result = Minimize(
      [&](std::span<const double> p) { return SurrogateLoss(*released, p); },
      std::vector<double>(params, 0.0), config.optimizer);

  model.scaled_theta.assign(result.x.begin(), result.x.begin() + static_cast<std::ptrdiff_t>(d));
  model.scaled_intercept = config.fit_intercept ? result.x[d] : 0.0;
  model.sketch = std::move(released);
  model.trace = result.trace;
  Unscale(model);
  return model;
}

// ---------------------------------------------------------------------------
// Mode finding

struct ModeResult {
  std::vector<double> point;
  double kde = 0.0;
  double initial_kde = 0.0;
};

// Derivative-free ascent on the estimated density from `init`. Finds a local
// mode only; the density is not concave in general.
inline ModeResult FindMode(const RaceSketch& sketch, std::span<const double> init,
                           const OptimizerConfig& config = {}, double delta = 0.1) {
  detail::RequireDim(init.size(), sketch.family().dim);
  const std::uint32_t groups = GroupCount(delta);
  if (sketch.rows() < groups) {
    throw Error(ErrorCode::kInsufficientRows, "sketch has too few rows for median-of-means");
  }
  const double n_hat = EstimateSize(sketch);
  auto density = [&](std::span<const double> q) {
    return Normalize(MedianOfMeans(RowValues(sketch, q), groups), n_hat);
  };
  const auto result = Minimize([&](std::span<const double> q) { return -density(q); },
                               std::vector<double>(init.begin(), init.end()), config);
  ModeResult mode;
  mode.point = result.x;
  mode.kde = -result.value;
  mode.initial_kde = -result.trace.front();
  return mode;
}

}  // namespace race

#endif  // RACE_ML_HPP_
