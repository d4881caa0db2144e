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

// Counter-based randomness. Every random quantity in the library (hash
// projections, offsets, universal-hash coefficients, Laplace noise) is a pure
// function of a root seed and an index tuple, so two processes that agree on
// the seed materialize bit-identical hash functions. std:: distributions are
// implementation-defined and are not used on these paths.

#ifndef RACE_RANDOM_HPP_
#define RACE_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace race::random {

// Domain-separation tags, one per kind of derived quantity.
enum class Stream : std::uint64_t {
  kProjection = 0x70726f6aULL,
  kOffset = 0x6f666673ULL,
  kUniversal = 0x756e6976ULL,
  kNoise = 0x6e6f6973ULL,
};

constexpr std::uint64_t Mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t Derive(std::uint64_t seed, Stream stream,
                               std::initializer_list<std::uint64_t> counters) {
  std::uint64_t h = Mix(seed ^ Mix(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t c : counters) h = Mix(h ^ Mix(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Uniform on the open interval (0, 1); never returns 0 or 1.
constexpr double ToOpenUnit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double Uniform(std::uint64_t seed, Stream stream,
                      std::initializer_list<std::uint64_t> counters) {
  return ToOpenUnit(Derive(seed, stream, counters));
}

// Box-Muller, cosine branch. The second uniform comes from a re-mixed word so
// the pair is independent.
inline double Gaussian(std::uint64_t seed, Stream stream,
                       std::initializer_list<std::uint64_t> counters) {
  const std::uint64_t h = Derive(seed, stream, counters);
  const double u1 = ToOpenUnit(h);
  const double u2 = ToOpenUnit(Mix(h ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace race::random

#endif  // RACE_RANDOM_HPP_
