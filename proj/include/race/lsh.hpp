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

// Seeded locality-sensitive hash families and their analytic collision
// probabilities (the LSH kernels).
//
// Each row r of a sketch owns one hash function l_r drawn from the family.
// A hash function is `depth` elementary hashes composed into a tuple:
//
//   SRP:              v_i = [<g_i, x> >= 0]
//   EuclideanPStable: v_i = floor((<g_i, x> + b_i) / bandwidth)
//
// with g_i ~ N(0, I) and b_i ~ U[0, bandwidth). The tuple is then mapped into
// [0, range). For SRP with 2^depth <= range the packed sign bits are placed
// injectively (rotated by a per-row offset); otherwise a seeded 2-universal
// hash mod (2^61 - 1) reduces the tuple, which adds a false-collision rate of
// at most 1/range on distinct raw codes.

#ifndef RACE_LSH_HPP_
#define RACE_LSH_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "race/error.hpp"
#include "race/random.hpp"

namespace race {

enum class LshKind : std::uint8_t {
  kSrp = 0,
  kEuclideanPStable = 1,
  // SRP applied to the asymmetric pair transform [x, y] / -[x, y]. Hashing
  // and kernel are those of SRP; the tag records how the sketch was built.
  kAsymmetricSrp = 2,
};

inline constexpr std::uint32_t kMaxDepth = 64;

struct LshFamily {
  LshKind kind = LshKind::kSrp;
  std::uint32_t dim = 0;
  std::uint32_t depth = 1;
  double bandwidth = 1.0;
  std::uint32_t range = 2;
  std::uint64_t seed = 0;

  bool IsSrpLike() const { return kind != LshKind::kEuclideanPStable; }

  friend bool operator==(const LshFamily&, const LshFamily&) = default;
};

inline LshFamily NewFamily(LshKind kind, std::uint32_t dim, std::uint32_t depth,
                           double bandwidth, std::uint32_t range,
                           std::uint64_t seed) {
  using detail::Require;
  Require(dim >= 1, ErrorCode::kInvalidParameter, "dim must be >= 1");
  Require(depth >= 1 && depth <= kMaxDepth, ErrorCode::kInvalidParameter,
          "depth must be in [1, 64]");
  Require(range >= 2, ErrorCode::kInvalidParameter, "range must be >= 2");
  if (kind == LshKind::kEuclideanPStable) {
    Require(std::isfinite(bandwidth) && bandwidth > 0.0,
            ErrorCode::kInvalidParameter, "bandwidth must be > 0");
  }
  Require(kind == LshKind::kSrp || kind == LshKind::kEuclideanPStable ||
              kind == LshKind::kAsymmetricSrp,
          ErrorCode::kInvalidParameter, "unknown LSH kind");
  return LshFamily{kind, dim, depth, bandwidth, range, seed};
}

namespace detail {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

constexpr std::uint64_t MulMod61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(product & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(product >> 61);
  std::uint64_t s = lo + hi;
  if (s >= kMersenne61) s -= kMersenne61;
  return s;
}

constexpr std::uint64_t Mod61(std::uint64_t x) {
  std::uint64_t s = (x & kMersenne61) + (x >> 61);
  if (s >= kMersenne61) s -= kMersenne61;
  return s;
}

inline double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

}  // namespace detail

// One row's hash function l_r, fully materialized.
namespace detail {

// Maps a raw code into [0, range): bit packing when that is injective,
// otherwise a 2-universal hash over GF(2^61 - 1).
inline std::uint32_t Rebucket(std::span<const std::int64_t> code,
                              const std::uint64_t* coefficients, std::uint64_t shift,
                              bool direct, std::uint32_t range) {
  if (direct) {
    std::uint64_t packed = 0;
    for (std::size_t i = 0; i < code.size(); ++i) {
      packed |= static_cast<std::uint64_t>(code[i]) << i;
    }
    return static_cast<std::uint32_t>((packed + shift) % range);
  }
  std::uint64_t acc = shift;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const std::uint64_t v = Mod61(static_cast<std::uint64_t>(code[i]));
    acc += MulMod61(coefficients[i], v);
    if (acc >= kMersenne61) acc -= kMersenne61;
  }
  return static_cast<std::uint32_t>(acc % range);
}

}  // namespace detail

class RowHasher {
 public:
  RowHasher(const LshFamily& family, std::uint64_t row)
      : family_(family),
        projections_(std::size_t{family.depth} * family.dim),
        offsets_(family.depth, 0.0),
        coefficients_(family.depth) {
    using random::Stream;
    for (std::uint32_t i = 0; i < family.depth; ++i) {
      for (std::uint32_t j = 0; j < family.dim; ++j) {
        projections_[std::size_t{i} * family.dim + j] =
            random::Gaussian(family.seed, Stream::kProjection, {row, i, j});
      }
      if (family.kind == LshKind::kEuclideanPStable) {
        offsets_[i] = family.bandwidth *
                      random::Uniform(family.seed, Stream::kOffset, {row, i});
      }
      coefficients_[i] =
          1 + random::Derive(family.seed, Stream::kUniversal, {row, i}) %
                  (detail::kMersenne61 - 1);
    }
    shift_ = random::Derive(family.seed, Stream::kUniversal,
                            {row, std::uint64_t{kMaxDepth}}) %
             detail::kMersenne61;
    direct_ = family.IsSrpLike() && family.depth < 32 &&
              (std::uint64_t{1} << family.depth) <= family.range;
  }

  // Test hook: a hasher with explicit projection vectors (depth x dim,
  // row-major) and offsets. Universal coefficients still come from `row`.
  static RowHasher WithProjections(const LshFamily& family, std::uint64_t row,
                                   std::vector<double> projections,
                                   std::vector<double> offsets = {}) {
    RowHasher h(family, row);
    detail::RequireDim(projections.size(),
                       std::size_t{family.depth} * family.dim);
    h.projections_ = std::move(projections);
    if (!offsets.empty()) {
      detail::RequireDim(offsets.size(), family.depth);
      h.offsets_ = std::move(offsets);
    }
    return h;
  }

  // Elementary hash values v_0..v_{depth-1}: sign bits for SRP, lattice
  // cells for p-stable. Two points collide under the raw hash iff all match.
  void RawCode(std::span<const double> x, std::span<std::int64_t> out) const {
    detail::RequireDim(x.size(), family_.dim);
    const std::size_t d = family_.dim;
    for (std::uint32_t i = 0; i < family_.depth; ++i) {
      const double proj =
          detail::Dot(std::span<const double>(projections_).subspan(i * d, d), x);
      if (family_.kind == LshKind::kEuclideanPStable) {
        out[i] = static_cast<std::int64_t>(
            std::floor((proj + offsets_[i]) / family_.bandwidth));
      } else {
        out[i] = proj >= 0.0 ? 1 : 0;  // sign(0) := +1
      }
    }
  }

  std::vector<std::int64_t> RawCode(std::span<const double> x) const {
    std::vector<std::int64_t> out(family_.depth);
    RawCode(x, out);
    return out;
  }

  std::uint32_t Bucket(std::span<const double> x) const {
    std::array<std::int64_t, kMaxDepth> code{};
    RawCode(x, std::span<std::int64_t>(code.data(), family_.depth));
    return detail::Rebucket(std::span<const std::int64_t>(code.data(), family_.depth),
                            coefficients_.data(), shift_, direct_, family_.range);
  }

  // True when distinct raw codes always land in distinct buckets.
  bool injective() const { return direct_; }

 private:
  friend class HashBank;

  LshFamily family_;
  std::vector<double> projections_;
  std::vector<double> offsets_;
  std::vector<std::uint64_t> coefficients_;
  std::uint64_t shift_ = 0;
  bool direct_ = false;
};

// Hash functions for rows [0, rows), materialized once and shared read-only.
// Parameters live in flat row-major arrays so a pass over all rows streams
// through memory.
class HashBank {
 public:
  HashBank(const LshFamily& family, std::uint32_t rows)
      : family_(family),
        rows_(rows),
        projections_(std::size_t{rows} * family.depth * family.dim),
        offsets_(std::size_t{rows} * family.depth),
        coefficients_(std::size_t{rows} * family.depth),
        shifts_(rows) {
    const std::size_t block = std::size_t{family.depth} * family.dim;
    for (std::uint32_t r = 0; r < rows; ++r) {
      const RowHasher h(family, r);
      std::copy(h.projections_.begin(), h.projections_.end(),
                projections_.begin() + r * block);
      std::copy(h.offsets_.begin(), h.offsets_.end(),
                offsets_.begin() + std::size_t{r} * family.depth);
      std::copy(h.coefficients_.begin(), h.coefficients_.end(),
                coefficients_.begin() + std::size_t{r} * family.depth);
      shifts_[r] = h.shift_;
      direct_ = h.direct_;
    }
  }

  const LshFamily& family() const { return family_; }
  std::uint32_t rows() const { return rows_; }

  std::uint32_t Hash(std::uint32_t r, std::span<const double> x) const {
    detail::RequireDim(x.size(), family_.dim);
    return HashUnchecked(r, x);
  }

  // Calls visit(r, bucket) for every row in order.
  template <typename Visit>
  void ForEachBucket(std::span<const double> x, Visit&& visit) const {
    detail::RequireDim(x.size(), family_.dim);
    for (std::uint32_t r = 0; r < rows_; ++r) visit(r, HashUnchecked(r, x));
  }

 private:
  // Same result as RowHasher::Bucket, folding each elementary value into the
  // bucket as it is produced.
  std::uint32_t HashUnchecked(std::uint32_t r, std::span<const double> x) const {
    const std::size_t d = family_.dim;
    const std::size_t p = family_.depth;
    const double* proj = projections_.data() + r * p * d;
    const double* offset = offsets_.data() + r * p;
    const std::uint64_t* coef = coefficients_.data() + r * p;
    const bool pstable = family_.kind == LshKind::kEuclideanPStable;
    std::uint64_t acc = direct_ ? 0 : shifts_[r];
    for (std::size_t i = 0; i < p; ++i, proj += d) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += proj[j] * x[j];
      if (direct_) {
        acc |= static_cast<std::uint64_t>(dot >= 0.0) << i;
        continue;
      }
      const std::int64_t v = pstable ? static_cast<std::int64_t>(
                                           std::floor((dot + offset[i]) / family_.bandwidth))
                                     : (dot >= 0.0 ? 1 : 0);
      acc += detail::MulMod61(coef[i], detail::Mod61(static_cast<std::uint64_t>(v)));
      if (acc >= detail::kMersenne61) acc -= detail::kMersenne61;
    }
    if (direct_) acc += shifts_[r];
    return static_cast<std::uint32_t>(acc % family_.range);
  }

  LshFamily family_;
  std::uint32_t rows_;
  std::vector<double> projections_;
  std::vector<double> offsets_;
  std::vector<std::uint64_t> coefficients_;
  std::vector<std::uint64_t> shifts_;
  bool direct_ = false;
};

// l_row(x) for a single row. Materializes the row's parameters on every call;
// bulk paths go through HashBank.
inline std::uint32_t Hash(const LshFamily& family, std::uint64_t row,
                          std::span<const double> x) {
  return RowHasher(family, row).Bucket(x);
}

// Single elementary-hash collision probability of 2-stable LSH with bucket
// width w at distance c.
inline double PStableCollision(double distance, double width) {
  if (distance <= 0.0) return 1.0;
  const double r = width / distance;
  const double tail = 0.5 * std::erfc(r / std::numbers::sqrt2);  // Phi(-r)
  const double q = 1.0 - 2.0 * tail -
                   2.0 / (std::sqrt(2.0 * std::numbers::pi) * r) *
                       (1.0 - std::exp(-0.5 * r * r));
  return std::clamp(q, 0.0, 1.0);
}

// Angle between x and y in [0, pi], stable near 0 and pi.
inline double Angle(std::span<const double> x, std::span<const double> y) {
  const double nx = detail::Norm(x);
  const double ny = detail::Norm(y);
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] / nx;
    const double b = y[i] / ny;
    diff += (a - b) * (a - b);
    sum += (a + b) * (a + b);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

// The LSH kernel k(x, y) of the raw (pre-rebucketing) hash.
inline double CollisionProbability(const LshFamily& family,
                                   std::span<const double> x,
                                   std::span<const double> y) {
  detail::RequireDim(x.size(), family.dim);
  detail::RequireDim(y.size(), family.dim);
  if (family.IsSrpLike()) {
    if (detail::Norm(x) == 0.0 || detail::Norm(y) == 0.0) {
      throw Error(ErrorCode::kZeroVector, "SRP angle undefined for zero vector");
    }
    const double single = 1.0 - Angle(x, y) / std::numbers::pi;
    return std::pow(single, static_cast<double>(family.depth));
  }
  double dist2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dist2 += (x[i] - y[i]) * (x[i] - y[i]);
  return std::pow(PStableCollision(std::sqrt(dist2), family.bandwidth),
                  static_cast<double>(family.depth));
}

struct AsymmetricPair {
  std::vector<double> plus;
  std::vector<double> minus;
};

// ([x, y], -[x, y]).
inline AsymmetricPair AsymmetricPairTransform(std::span<const double> x,
                                              double y_target) {
  AsymmetricPair pair;
  pair.plus.assign(x.begin(), x.end());
  pair.plus.push_back(y_target);
  pair.minus.resize(pair.plus.size());
  std::transform(pair.plus.begin(), pair.plus.end(), pair.minus.begin(),
                 [](double v) { return -v; });
  return pair;
}

}  // namespace race

#endif  // RACE_LSH_HPP_
