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

// Private density estimation on a two-cluster mixture: builds a sketch,
// releases it at a few privacy levels and compares against the exact KDE.

#include <cstdio>
#include <random>
#include <vector>

#include "race/oracle.hpp"
#include "race/race.hpp"

int main() {
  constexpr std::size_t kPoints = 20000;
  constexpr std::uint32_t kRows = 400;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.4);
  std::bernoulli_distribution pick(0.7);

  race::Dataset data(2);
  for (std::size_t i = 0; i < kPoints; ++i) {
    const double cx = pick(rng) ? -1.5 : 2.0;
    const double p[2] = {cx + noise(rng), noise(rng)};
    data.Append(p);
  }

  const auto family =
      race::NewFamily(race::LshKind::kEuclideanPStable, 2, 2, 1.0, 200, 11);
  const auto clean = race::Build(data, family, kRows);

  const std::vector<std::vector<double>> queries = {
      {-1.5, 0.0}, {0.0, 0.0}, {2.0, 0.0}, {2.0, 1.5}, {5.0, 5.0}};

  std::printf("%-12s %10s %10s", "query", "exact", "clean");
  const double epsilons[] = {10.0, 1.0, 0.1};
  for (double eps : epsilons) std::printf("   eps=%-5g", eps);
  std::printf("\n");

  std::vector<race::RaceSketch> released;
  for (std::size_t e = 0; e < std::size(epsilons); ++e) {
    race::PrivacyBudget budget(epsilons[e]);
    released.push_back(race::Privatize(clean, budget, race::NoiseSeed::FromEntropy()));
  }

  for (const auto& q : queries) {
    const double exact =
        race::oracle::ExactKernelSum(data, q, family).value / static_cast<double>(kPoints);
    std::printf("(%4.1f,%4.1f) %10.4f %10.4f", q[0], q[1], exact,
                race::QueryMedianOfMeans(clean, q, 0.1).kde);
    for (const auto& s : released) {
      std::printf(" %10.4f", race::QueryMedianOfMeans(s, q, 0.1).kde);
    }
    std::printf("\n");
  }
  std::printf("\nsketch: %u rows x %u buckets, %zu counter bytes for %zu points\n", kRows,
              family.range, clean.CounterBytes(), kPoints);
  return 0;
}
