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

// Canonical `.race` binary layout, little-endian throughout:
//
//   off  size  field
//     0     4  magic "RACE"
//     4     2  format version (u16, currently 1)
//     6     2  flags (u16): bit 0 = privatized; other bits must be zero
//     8     1  LSH kind (u8): 0 SRP, 1 EuclideanPStable, 2 AsymmetricSRP
//     9     3  reserved, zero
//    12     4  dim (u32)
//    16     4  depth (u32)
//    20     4  rows R (u32)
//    24     4  range W (u32)
//    28     4  reserved, zero
//    32     8  bandwidth (f64)
//    40     8  seed (u64)
//    48     8  privatized: epsilon (f64); clean: inserted count N (u64)
//    56  8*RW  counts (i64), row-major
//
// A privatized sketch has no field that can hold the exact count.

#ifndef RACE_FORMAT_HPP_
#define RACE_FORMAT_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "race/error.hpp"
#include "race/sketch.hpp"

namespace race {

inline constexpr std::array<std::uint8_t, 4> kSketchMagic = {'R', 'A', 'C', 'E'};
inline constexpr std::uint16_t kSketchFormatVersion = 1;
inline constexpr std::size_t kSketchHeaderBytes = 56;

namespace detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void Put(T value) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_same_v<T, double>, std::int64_t, T>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T Get() {
    using U = std::make_unsigned_t<std::conditional_t<std::is_same_v<T, double>, std::int64_t, T>>;
    if (in_.size() - pos_ < sizeof(U)) {
      throw Error(ErrorCode::kTruncated, "sketch stream ends early");
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> Serialize(const RaceSketch& sketch) {
  std::vector<std::uint8_t> out;
  out.reserve(kSketchHeaderBytes + sketch.counts().size() * 8);
  for (std::uint8_t b : kSketchMagic) out.push_back(b);
  detail::ByteWriter w(out);
  const LshFamily& f = sketch.family();
  w.Put<std::uint16_t>(kSketchFormatVersion);
  w.Put<std::uint16_t>(sketch.privatized() ? 1 : 0);
  w.Put<std::uint8_t>(static_cast<std::uint8_t>(f.kind));
  for (int i = 0; i < 3; ++i) w.Put<std::uint8_t>(0);
  w.Put<std::uint32_t>(f.dim);
  w.Put<std::uint32_t>(f.depth);
  w.Put<std::uint32_t>(sketch.rows());
  w.Put<std::uint32_t>(f.range);
  w.Put<std::uint32_t>(0);
  w.Put<double>(f.bandwidth);
  w.Put<std::uint64_t>(f.seed);
  if (sketch.privatized()) {
    w.Put<double>(*sketch.epsilon());
  } else {
    w.Put<std::uint64_t>(*sketch.inserted());
  }
  for (std::int64_t c : sketch.counts()) w.Put<std::int64_t>(c);
  return out;
}

inline RaceSketch Deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSketchMagic.size() ||
      !std::equal(kSketchMagic.begin(), kSketchMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::kMalformedHeader, "missing RACE magic");
  }
  detail::ByteReader r(bytes.subspan(kSketchMagic.size()));
  const auto version = r.Get<std::uint16_t>();
  if (version != kSketchFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported sketch format version " + std::to_string(version));
  }
  const auto flags = r.Get<std::uint16_t>();
  const auto kind = r.Get<std::uint8_t>();
  std::uint32_t reserved = 0;
  for (int i = 0; i < 3; ++i) reserved |= r.Get<std::uint8_t>();
  const auto dim = r.Get<std::uint32_t>();
  const auto depth = r.Get<std::uint32_t>();
  const auto rows = r.Get<std::uint32_t>();
  const auto range = r.Get<std::uint32_t>();
  reserved |= r.Get<std::uint32_t>();
  const auto bandwidth = r.Get<double>();
  const auto seed = r.Get<std::uint64_t>();
  if ((flags & ~std::uint16_t{1}) != 0 || reserved != 0 || kind > 2 || rows == 0) {
    throw Error(ErrorCode::kMalformedHeader, "invalid header fields");
  }
  const bool privatized = (flags & 1) != 0;

  LshFamily family;
  try {
    family = NewFamily(static_cast<LshKind>(kind), dim, depth, bandwidth, range, seed);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedHeader, e.what());
  }

  std::optional<double> epsilon;
  std::optional<std::uint64_t> inserted;
  if (privatized) {
    epsilon = r.Get<double>();
    if (!(*epsilon > 0.0)) throw Error(ErrorCode::kMalformedHeader, "epsilon must be > 0");
  } else {
    inserted = r.Get<std::uint64_t>();
  }

  const std::uint64_t cells = std::uint64_t{rows} * range;
  if (r.remaining() / 8 < cells) {
    throw Error(ErrorCode::kTruncated, "counter matrix is incomplete");
  }
  if (r.remaining() != cells * 8) {
    throw Error(ErrorCode::kMalformedHeader, "trailing bytes after counter matrix");
  }
  std::vector<std::int64_t> counts(cells);
  for (auto& c : counts) c = r.Get<std::int64_t>();

  RaceSketch sketch = detail::SketchAccess::Restore(family, rows, std::move(counts),
                                                    epsilon, inserted);
  if (!privatized && !sketch.RowSumsConsistent()) {
    throw Error(ErrorCode::kMalformedHeader,
                "clean sketch rows do not sum to the inserted count");
  }
  return sketch;
}

inline void WriteSketchFile(const std::string& path, const RaceSketch& sketch) {
  const auto bytes = Serialize(sketch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

inline RaceSketch ReadSketchFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return Deserialize(bytes);
}

}  // namespace race

#endif  // RACE_FORMAT_HPP_
