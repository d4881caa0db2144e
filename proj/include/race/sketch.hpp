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

#ifndef RACE_SKETCH_HPP_
#define RACE_SKETCH_HPP_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "race/error.hpp"
#include "race/io.hpp"
#include "race/lsh.hpp"

namespace race {

namespace detail {
struct SketchAccess;
}

// Repeated Array of Count Estimators: an R x W matrix where row r counts
// inserted points by their bucket under l_r.
//
// While clean (not privatized), every counter is >= 0 and every row sums to
// `inserted()`: each point increments exactly one counter per row, so the W
// counters of a row see disjoint subsets of the data. Once privatized the
// sketch is frozen and the exact element count is gone.
class RaceSketch {
 public:
  RaceSketch(const LshFamily& family, std::uint32_t rows)
      : RaceSketch(family, rows, nullptr) {}

  // Shares an already materialized bank (used by sharded builds and
  // classifiers, whose sketches all hash identically).
  RaceSketch(std::shared_ptr<const HashBank> bank)
      : RaceSketch(bank->family(), bank->rows(), bank) {}

  std::uint32_t rows() const { return rows_; }
  std::uint32_t range() const { return family_.range; }
  const LshFamily& family() const { return family_; }
  bool privatized() const { return privatized_; }
  std::optional<double> epsilon() const { return epsilon_; }
  std::optional<std::uint64_t> inserted() const { return inserted_; }

  std::span<const std::int64_t> counts() const { return counts_; }
  std::span<const std::int64_t> row(std::uint32_t r) const {
    return std::span<const std::int64_t>(counts_).subspan(std::size_t{r} * range(), range());
  }
  std::int64_t count(std::uint32_t r, std::uint32_t bucket) const {
    return counts_[std::size_t{r} * range() + bucket];
  }

  const HashBank& hashes() const { return *bank_; }
  const std::shared_ptr<const HashBank>& shared_hashes() const { return bank_; }

  std::uint32_t Bucket(std::uint32_t r, std::span<const double> x) const {
    return bank_->Hash(r, x);
  }

  void Add(std::span<const double> x) {
    if (privatized_) {
      throw Error(ErrorCode::kFrozenSketch, "cannot add to a privatized sketch");
    }
    const std::size_t width = range();
    bank_->ForEachBucket(x, [&](std::uint32_t r, std::uint32_t j) { ++counts_[r * width + j]; });
    ++*inserted_;
  }

  // Memory held by the counter matrix; independent of the number of points.
  std::size_t CounterBytes() const { return counts_.size() * sizeof(std::int64_t); }

  // Disjoint-partition invariant of a clean sketch.
  bool RowSumsConsistent() const {
    if (privatized_ || !inserted_) return false;
    for (std::uint32_t r = 0; r < rows_; ++r) {
      auto values = row(r);
      std::int64_t sum = 0;
      for (std::int64_t v : values) {
        if (v < 0) return false;
        sum += v;
      }
      if (static_cast<std::uint64_t>(sum) != *inserted_) return false;
    }
    return true;
  }

  friend bool operator==(const RaceSketch& a, const RaceSketch& b) {
    return a.family_ == b.family_ && a.rows_ == b.rows_ &&
           a.privatized_ == b.privatized_ && a.epsilon_ == b.epsilon_ &&
           a.inserted_ == b.inserted_ && a.counts_ == b.counts_;
  }

 private:
  friend struct detail::SketchAccess;

  RaceSketch(const LshFamily& family, std::uint32_t rows,
             std::shared_ptr<const HashBank> bank)
      : family_(family), rows_(rows), inserted_(0) {
    detail::Require(rows >= 1, ErrorCode::kInvalidParameter, "rows must be >= 1");
    family_ = NewFamily(family.kind, family.dim, family.depth, family.bandwidth,
                        family.range, family.seed);
    bank_ = bank ? std::move(bank) : std::make_shared<const HashBank>(family_, rows_);
    counts_.assign(std::size_t{rows_} * family_.range, 0);
  }

  LshFamily family_;
  std::uint32_t rows_;
  std::shared_ptr<const HashBank> bank_;
  std::vector<std::int64_t> counts_;
  bool privatized_ = false;
  std::optional<double> epsilon_;
  std::optional<std::uint64_t> inserted_;
};

namespace detail {

// Privileged mutation used by the privacy and serialization code only.
struct SketchAccess {
  static std::vector<std::int64_t>& counts(RaceSketch& s) { return s.counts_; }

  static void MarkReleased(RaceSketch& s, double epsilon) {
    s.privatized_ = true;
    s.epsilon_ = epsilon;
    s.inserted_.reset();
  }

  static void SetInserted(RaceSketch& s, std::uint64_t n) { s.inserted_ = n; }

  static RaceSketch Restore(const LshFamily& family, std::uint32_t rows,
                            std::vector<std::int64_t> counts,
                            std::optional<double> epsilon,
                            std::optional<std::uint64_t> inserted) {
    RaceSketch s(family, rows);
    s.counts_ = std::move(counts);
    s.privatized_ = epsilon.has_value();
    s.epsilon_ = epsilon;
    s.inserted_ = inserted;
    return s;
  }
};

inline void RequireMergeable(const RaceSketch& a, const RaceSketch& b) {
  if (a.privatized() || b.privatized()) {
    throw Error(ErrorCode::kFrozenSketch, "privatized sketches cannot be merged");
  }
  if (!(a.family() == b.family()) || a.rows() != b.rows()) {
    throw Error(ErrorCode::kIncompatibleSketch,
                "sketches differ in family descriptor or shape");
  }
}

}  // namespace detail

// Elementwise sum; equals the sketch built on the union of both inputs.
inline RaceSketch Merge(const RaceSketch& a, const RaceSketch& b) {
  detail::RequireMergeable(a, b);
  RaceSketch out = a;
  auto& dst = detail::SketchAccess::counts(out);
  auto src = b.counts();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  detail::SketchAccess::SetInserted(out, *a.inserted() + *b.inserted());
  return out;
}

// Inserts every row of `data`. With threads > 1 the rows are split into
// contiguous shards, each worker fills a private partial sketch over the same
// hash bank, and the partials are added in shard order.
inline void AddAll(RaceSketch& sketch, const Dataset& data, unsigned threads = 1) {
  const std::size_t n = data.size();
  if (n == 0) return;
  detail::RequireDim(data.dim(), sketch.family().dim);
  threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) sketch.Add(data.row(i));
    return;
  }
  std::vector<RaceSketch> partials(threads, RaceSketch(sketch.shared_hashes()));
  {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        const std::size_t lo = std::min(n, t * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) partials[t].Add(data.row(i));
      });
    }
  }
  for (const auto& part : partials) sketch = Merge(sketch, part);
}

// One pass over `data` into a fresh sketch.
inline RaceSketch Build(const Dataset& data, const LshFamily& family,
                        std::uint32_t rows, unsigned threads = 1) {
  RaceSketch sketch(family, rows);
  AddAll(sketch, data, threads);
  return sketch;
}

}  // namespace race

#endif  // RACE_SKETCH_HPP_
