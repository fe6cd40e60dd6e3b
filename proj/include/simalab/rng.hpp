// Copyright 2026 The SimA Lab Authors
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

// Counter-based random numbers.
//
// All randomness in the library comes from Philox4x32-10 keyed by a 64-bit
// seed, with a 64-bit stream id and a 64-bit block counter packed into the
// 128-bit counter. A draw is a pure function of (seed, stream, position), so
// results do not depend on thread count or evaluation order. Stream ids are
// derived from structured tuples (tag, index, ...) by `stream_id`.
//
// Normal variates use the Box-Muller transform on pairs of 53-bit uniforms.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace simalab {

// Bumped whenever the mapping from (seed, stream, position) to values changes.
inline constexpr std::string_view kRngVersion = "philox4x32-10+box-muller/v1";

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Tags keep the stream namespaces of unrelated consumers apart.
enum class StreamTag : std::uint64_t {
  kMember = 1,
  kHeldout = 2,
  kOod = 3,
  kRing = 4,
  kInit = 5,
  kTrainBatch = 6,
  kAttack = 7,
  kPfamiPerturb = 8,
  kEncoderFrozen = 9,
  kEncoderQuery = 10,
  kProjection = 11,
  kSplitSeed = 12,
};

inline constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t part : parts) h = detail::splitmix64(h ^ detail::splitmix64(part));
  return h;
}

inline constexpr std::uint64_t stream_id(StreamTag tag,
                                         std::initializer_list<std::uint64_t> parts = {}) {
  std::uint64_t h = stream_id({static_cast<std::uint64_t>(tag)});
  for (std::uint64_t part : parts) h = detail::splitmix64(h ^ detail::splitmix64(part));
  return h;
}

// Derives an independent 64-bit seed, e.g. a sub-seed from the master seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return detail::splitmix64(seed ^ detail::splitmix64(salt ^ 0xC2B2AE3D27D4EB4Full));
}

// Sequential view of one (seed, stream) pair. Cheap to construct; create one
// per logical consumer (per point, per draw) rather than sharing.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint32_t next_u32() {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [lo, hi]; rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
      draw = next_u64();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
  }

 private:
  void refill() {
    const Philox4x32::Counter ctr{
        static_cast<std::uint32_t>(block_index_), static_cast<std::uint32_t>(block_index_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    block_ = Philox4x32::generate(ctr, key_);
    ++block_index_;
    lane_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Philox4x32::Counter block_{};
  int lane_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace simalab
