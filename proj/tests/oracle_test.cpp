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

#include "race/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace race::oracle {
namespace {

TEST(ExactKernelSumTest, SinglePointAndCopies) {
  const auto family = NewFamily(LshKind::kSrp, 3, 3, 1.0, 8, 0);
  const std::vector<double> q{1.0, 2.0, -1.0};
  Dataset data(3);
  data.Append(q);
  EXPECT_EQ(ExactKernelSum(data, q, family).value, 1.0);
  for (int i = 0; i < 9; ++i) data.Append(q);
  EXPECT_EQ(ExactKernelSum(data, q, family).value, 10.0);
}

TEST(ExactKernelSumTest, KnownAngles) {
  // Angles 0, pi/2 and pi with p = 2: 1 + 1/4 + 0.
  const auto family = NewFamily(LshKind::kSrp, 2, 2, 1.0, 4, 0);
  Dataset data(2, {1.0, 0.0, 0.0, 1.0, -1.0, 0.0});
  EXPECT_NEAR(ExactKernelSum(data, std::vector<double>{1.0, 0.0}, family).value, 1.25,
              1e-15);
}

TEST(ExactKernelSumTest, OrderFreeAndAdditive) {
  const auto family = NewFamily(LshKind::kEuclideanPStable, 3, 2, 1.5, 8, 0);
  const auto a = testing::GaussianData(50, {0, 0, 0}, 1.0, 1);
  const auto b = testing::GaussianData(70, {1, 0, 0}, 1.0, 2);
  const std::vector<double> q{0.5, 0.2, 0.1};
  const double ab = ExactKernelSum(testing::Concat(a, b), q, family).value;
  const double ba = ExactKernelSum(testing::Concat(b, a), q, family).value;
  const double sum = ExactKernelSum(a, q, family).value + ExactKernelSum(b, q, family).value;
  EXPECT_NEAR(ab, ba, 1e-12);
  EXPECT_NEAR(ab, sum, 1e-12);
}

TEST(MonteCarloCollisionTest, IdenticalPointsAlwaysCollide) {
  for (LshKind kind : {LshKind::kSrp, LshKind::kEuclideanPStable}) {
    const auto family = NewFamily(kind, 4, 3, 1.0, 8, 0);
    const std::vector<double> x{0.3, -1.0, 2.0, 0.5};
    const auto r = MonteCarloCollision(family, x, x, 1000, 3);
    EXPECT_EQ(r.value, 1.0);
    EXPECT_EQ(r.std_err, 0.0);
  }
}

TEST(MonteCarloCollisionTest, OrthogonalSingleBit) {
  const auto family = NewFamily(LshKind::kSrp, 2, 1, 1.0, 2, 0);
  const auto r = MonteCarloCollision(family, std::vector<double>{1.0, 0.0},
                                     std::vector<double>{0.0, 1.0}, 100000, 4);
  EXPECT_NEAR(r.value, 0.5, 0.005);
}

TEST(MonteCarloCollisionTest, PStableReference) {
  // sigma = 0.5 at distance 0.25, depth 2; reference from a 30-digit evaluation.
  const auto family = NewFamily(LshKind::kEuclideanPStable, 2, 2, 0.5, 8, 0);
  const auto r = MonteCarloCollision(family, std::vector<double>{0.0, 0.0},
                                     std::vector<double>{0.25, 0.0}, 200000, 5);
  EXPECT_NEAR(r.value, 0.37154927902527984, 4.0 * r.std_err);
  EXPECT_NEAR(CollisionProbability(family, std::vector<double>{0.0, 0.0},
                                   std::vector<double>{0.25, 0.0}),
              0.37154927902527984, 1e-12);
}

TEST(MonteCarloCollisionTest, Deterministic) {
  const auto family = NewFamily(LshKind::kSrp, 2, 2, 1.0, 4, 0);
  const std::vector<double> x{1.0, 0.2}, y{0.1, 1.0};
  EXPECT_EQ(MonteCarloCollision(family, x, y, 5000, 9).value,
            MonteCarloCollision(family, x, y, 5000, 9).value);
}

TEST(ExactKdeClassifyTest, PicksDensestClass) {
  const auto family = NewFamily(LshKind::kSrp, 2, 4, 1.0, 8, 0);
  std::vector<Dataset> classes{testing::GaussianData(100, {3.0, 0.0}, 0.5, 1),
                               testing::GaussianData(100, {-3.0, 0.0}, 0.5, 2)};
  EXPECT_EQ(ExactKdeClassify(classes, std::vector<double>{2.0, 0.1}, family).index, 0u);
  EXPECT_EQ(ExactKdeClassify(classes, std::vector<double>{-2.0, 0.1}, family).index, 1u);
  const auto tie =
      ExactKdeClassify({classes[0], classes[0]}, std::vector<double>{1.0, 1.0}, family);
  EXPECT_EQ(tie.index, 0u);
  EXPECT_EQ(tie.kde[0], tie.kde[1]);
}

TEST(ExactSurrogateLossTest, PerfectFitAndOrthogonalQuery) {
  // y = x on the point (1, 1): q = [1, -1] is orthogonal to z+ = [1, 1].
  Dataset x(1, {1.0});
  const std::vector<double> y{1.0};
  const std::vector<double> theta{1.0};
  EXPECT_NEAR(ExactSurrogateLoss(x, y, theta, 4).value, 2.0 * std::pow(0.5, 4), 1e-12);
  const std::vector<double> worse{-1.0};
  EXPECT_GT(ExactSurrogateLoss(x, y, worse, 4).value, ExactSurrogateLoss(x, y, theta, 4).value);
  // With an intercept column, z+ = [1, 1, 1] and q = [1, 0, -1].
  const std::vector<double> with_b{1.0, 0.0};
  EXPECT_NEAR(ExactSurrogateLoss(x, y, with_b, 4, true).value, 2.0 * std::pow(0.5, 4), 1e-12);
}

TEST(ExactSurrogateLossTest, UnimodalAlongSlope) {
  // Noiseless y = 2x data: the loss along theta decreases to 2 then increases.
  Dataset x(1);
  std::vector<double> y;
  for (int i = -10; i <= 10; ++i) {
    if (i == 0) continue;
    x.Append(std::vector<double>{i / 10.0});
    y.push_back(2.0 * i / 10.0);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= 2.0 + 1e-12; t += 0.1) {
    const double v = ExactSurrogateLoss(x, y, std::vector<double>{t}, 4).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
  for (double t = 2.1; t <= 4.0; t += 0.1) {
    const double v = ExactSurrogateLoss(x, y, std::vector<double>{t}, 4).value;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

}  // namespace
}  // namespace race::oracle
