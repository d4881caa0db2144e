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

#include "race/sketch.hpp"

#include <cstring>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "race/format.hpp"
#include "race/privacy.hpp"
#include "test_util.hpp"

namespace race {
namespace {

using testing::GaussianData;

LshFamily Srp2d(std::uint64_t seed = 3) { return NewFamily(LshKind::kSrp, 2, 4, 1.0, 50, seed); }

template <typename F>
void ExpectError(ErrorCode code, F&& f) {
  try {
    f();
    FAIL() << "expected " << ErrorCodeName(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(SketchBuildTest, EmptyDatasetGivesZeroCounts) {
  const auto s = Build(Dataset(2), Srp2d(), 10);
  EXPECT_EQ(*s.inserted(), 0u);
  for (auto c : s.counts()) EXPECT_EQ(c, 0);
  EXPECT_EQ(s.counts().size(), 10u * 50u);
}

TEST(SketchBuildTest, IdenticalPointsShareOneBucketPerRow) {
  Dataset data(2);
  for (int i = 0; i < 5; ++i) data.Append(std::vector<double>{0.4, -1.1});
  const auto s = Build(data, NewFamily(LshKind::kEuclideanPStable, 2, 2, 0.3, 17, 8), 12);
  for (std::uint32_t r = 0; r < s.rows(); ++r) {
    int nonzero = 0;
    for (auto c : s.row(r)) {
      if (c != 0) {
        ++nonzero;
        EXPECT_EQ(c, 5);
      }
    }
    EXPECT_EQ(nonzero, 1);
  }
}

TEST(SketchBuildTest, RowsSumToN) {
  const auto data = GaussianData(1000, {0.0, 0.0}, 1.0, 1);
  const auto s = Build(data, Srp2d(), 100);
  EXPECT_TRUE(s.RowSumsConsistent());
  for (std::uint32_t r = 0; r < 100; ++r) {
    std::int64_t sum = 0;
    for (auto c : s.row(r)) sum += c;
    EXPECT_EQ(sum, 1000);
  }
}

TEST(SketchBuildTest, CountsEqualDirectRecount) {
  const auto data = GaussianData(60, {1.0, -1.0, 0.5}, 1.0, 2);
  const auto family = NewFamily(LshKind::kEuclideanPStable, 3, 2, 0.8, 7, 21);
  const auto s = Build(data, family, 9);
  for (std::uint32_t r = 0; r < 9; ++r) {
    for (std::uint32_t j = 0; j < 7; ++j) {
      std::int64_t expected = 0;
      for (std::size_t i = 0; i < data.size(); ++i) expected += Hash(family, r, data.row(i)) == j;
      EXPECT_EQ(s.count(r, j), expected);
    }
  }
}

TEST(SketchBuildTest, ShardedBuildMatchesSerial) {
  const auto data = GaussianData(777, {0.0, 0.0}, 1.0, 3);
  EXPECT_EQ(Build(data, Srp2d(), 40, 1), Build(data, Srp2d(), 40, 4));
}

TEST(SketchBuildTest, DimensionMismatch) {
  const auto data = GaussianData(5, {0.0, 0.0, 0.0}, 1.0, 3);
  ExpectError(ErrorCode::kDimensionMismatch, [&] { Build(data, Srp2d(), 4); });
}

TEST(SketchAddTest, AddIncrementsOneCounterPerRow) {
  RaceSketch s(Srp2d(), 20);
  const std::vector<double> x{0.3, 0.9};
  s.Add(x);
  std::vector<std::size_t> ones;
  for (std::size_t i = 0; i < s.counts().size(); ++i) {
    if (s.counts()[i] == 1) ones.push_back(i);
    else EXPECT_EQ(s.counts()[i], 0);
  }
  EXPECT_EQ(ones.size(), 20u);
  s.Add(x);
  for (auto i : ones) EXPECT_EQ(s.counts()[i], 2);
  EXPECT_EQ(*s.inserted(), 2u);
}

TEST(SketchAddTest, PrivatizedSketchIsFrozen) {
  RaceSketch s(Srp2d(), 20);
  PrivacyBudget budget(1.0);
  auto p = Privatize(s, budget, NoiseSeed::Deterministic(1));
  ExpectError(ErrorCode::kFrozenSketch, [&] { p.Add(std::vector<double>{1.0, 1.0}); });
}

TEST(SketchMergeTest, EqualsBuildOnUnion) {
  const auto a = GaussianData(300, {1.0, 0.0}, 1.0, 4);
  const auto b = GaussianData(200, {-1.0, 0.5}, 1.0, 5);
  const auto merged = Merge(Build(a, Srp2d(), 30), Build(b, Srp2d(), 30));
  EXPECT_EQ(merged, Build(testing::Concat(a, b), Srp2d(), 30));
  EXPECT_EQ(*merged.inserted(), 500u);
}

TEST(SketchMergeTest, EmptyIsIdentity) {
  const auto a = Build(GaussianData(50, {0.0, 1.0}, 1.0, 6), Srp2d(), 10);
  EXPECT_EQ(Merge(a, RaceSketch(Srp2d(), 10)), a);
  EXPECT_EQ(Merge(RaceSketch(Srp2d(), 10), a), a);
}

TEST(SketchMergeTest, AssociativeAndCommutative) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = Build(GaussianData(20 + rng() % 50, {0, 0}, 1.0, rng()), Srp2d(), 8);
    const auto b = Build(GaussianData(20 + rng() % 50, {1, 0}, 1.0, rng()), Srp2d(), 8);
    const auto c = Build(GaussianData(20 + rng() % 50, {0, 1}, 1.0, rng()), Srp2d(), 8);
    EXPECT_EQ(Merge(a, b), Merge(b, a));
    EXPECT_EQ(Merge(Merge(a, b), c), Merge(a, Merge(b, c)));
  }
}

TEST(SketchMergeTest, RejectsIncompatibleSketches) {
  const RaceSketch a(Srp2d(1), 10);
  ExpectError(ErrorCode::kIncompatibleSketch, [&] { Merge(a, RaceSketch(Srp2d(2), 10)); });
  ExpectError(ErrorCode::kIncompatibleSketch, [&] { Merge(a, RaceSketch(Srp2d(1), 11)); });
  ExpectError(ErrorCode::kIncompatibleSketch, [&] {
    Merge(a, RaceSketch(NewFamily(LshKind::kSrp, 2, 4, 1.0, 51, 1), 10));
  });
}

TEST(SketchMergeTest, RejectsPrivatizedInputs) {
  const RaceSketch a(Srp2d(), 10);
  PrivacyBudget budget(1.0);
  const auto p = Privatize(a, budget, NoiseSeed::Deterministic(3));
  ExpectError(ErrorCode::kFrozenSketch, [&] { Merge(a, p); });
  ExpectError(ErrorCode::kFrozenSketch, [&] { Merge(p, a); });
}

TEST(SketchFormatTest, RoundTripClean) {
  const auto s = Build(GaussianData(100, {0.0, 0.0}, 1.0, 9),
                       NewFamily(LshKind::kEuclideanPStable, 2, 3, 0.25, 31, 0xdeadbeefULL), 7);
  const auto bytes = Serialize(s);
  EXPECT_EQ(bytes.size(), kSketchHeaderBytes + 7u * 31u * 8u);
  EXPECT_EQ(Deserialize(bytes), s);
  EXPECT_EQ(Serialize(Deserialize(bytes)), bytes);
}

TEST(SketchFormatTest, RoundTripPrivatizedOmitsInserted) {
  const auto s = Build(GaussianData(100, {0.0, 0.0}, 1.0, 9), Srp2d(), 7);
  PrivacyBudget budget(0.5);
  const auto p = Privatize(s, budget, NoiseSeed::Deterministic(4));
  const auto bytes = Serialize(p);
  EXPECT_EQ(bytes[6] & 1, 1);
  // The slot that holds N for clean sketches holds epsilon instead.
  double eps = 0.0;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[48 + i]} << (8 * i);
  std::memcpy(&eps, &bits, 8);
  EXPECT_EQ(eps, 0.5);
  const auto back = Deserialize(bytes);
  EXPECT_EQ(back, p);
  EXPECT_FALSE(back.inserted().has_value());
  EXPECT_TRUE(back.privatized());
}

TEST(SketchFormatTest, LayoutIsLittleEndian) {
  const RaceSketch s(NewFamily(LshKind::kSrp, 3, 2, 1.0, 4, 0x0102030405060708ULL), 2);
  const auto bytes = Serialize(s);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RACE");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[12], 3);  // dim
  EXPECT_EQ(bytes[16], 2);  // depth
  EXPECT_EQ(bytes[20], 2);  // rows
  EXPECT_EQ(bytes[24], 4);  // range
  EXPECT_EQ(bytes[40], 0x08);
  EXPECT_EQ(bytes[47], 0x01);
}

TEST(SketchFormatTest, RejectsCorruptInput) {
  const auto s = Build(GaussianData(10, {0.0, 0.0}, 1.0, 9), Srp2d(), 3);
  auto bytes = Serialize(s);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  ExpectError(ErrorCode::kMalformedHeader, [&] { Deserialize(bad_magic); });

  auto bad_version = bytes;
  bad_version[4] = 2;
  ExpectError(ErrorCode::kVersionMismatch, [&] { Deserialize(bad_version); });

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  ExpectError(ErrorCode::kTruncated, [&] { Deserialize(truncated); });
  ExpectError(ErrorCode::kTruncated, [&] {
    Deserialize(std::span<const std::uint8_t>(bytes.data(), 20));
  });

  auto trailing = bytes;
  trailing.push_back(0);
  ExpectError(ErrorCode::kMalformedHeader, [&] { Deserialize(trailing); });

  auto bad_flags = bytes;
  bad_flags[6] = 0x80;
  ExpectError(ErrorCode::kMalformedHeader, [&] { Deserialize(bad_flags); });

  auto bad_counts = bytes;
  bad_counts[kSketchHeaderBytes] ^= 1;  // breaks the row-sum invariant
  ExpectError(ErrorCode::kMalformedHeader, [&] { Deserialize(bad_counts); });
}

TEST(SketchMemoryTest, CounterMemoryIndependentOfN) {
  const auto small = Build(GaussianData(10, {0.0, 0.0}, 1.0, 1), Srp2d(), 25);
  const auto large = Build(GaussianData(5000, {0.0, 0.0}, 1.0, 1), Srp2d(), 25);
  EXPECT_EQ(small.CounterBytes(), 25u * 50u * 8u);
  EXPECT_EQ(large.CounterBytes(), small.CounterBytes());
  EXPECT_EQ(Serialize(small).size(), Serialize(large).size());
}

}  // namespace
}  // namespace race
