//
// Copyright 2026 The ppate Authors.
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

#ifndef PPATE_RANDOM_HPP_
#define PPATE_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <limits>

namespace ppate {

// Purpose tags mixed into derived stream seeds so that draws made for
// different steps of the same query never share a stream.
enum class StreamPurpose : std::uint64_t {
  kGate = 1,
  kAnswer = 2,
  kVotes = 3,
  kSchedule = 4,
  kGroundTruth = 5,
  kDifficulty = 6,
  kRepetition = 7,
};

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the stream identified by (seed, index, purpose).
constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index,
                                   StreamPurpose purpose) {
  std::uint64_t h = SplitMix64(seed);
  h = SplitMix64(h ^ index);
  return SplitMix64(h ^ static_cast<std::uint64_t>(purpose));
}

// xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator; the
// output sequence is fully specified, unlike the standard distributions.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      word = SplitMix64(s);
    }
  }

  Xoshiro256(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose)
      : Xoshiro256(DeriveSeed(seed, index, purpose)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = Rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = Rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t Rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Uniform double in [0, 1) built from the top 53 bits.
template <typename Rng>
double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by Lemire's multiply-shift with rejection.
template <typename Rng>
std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(n);
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

// Standard normal deviate via the Marsaglia polar method. Only the spare-free
// variant is used so each call depends on nothing but the stream position.
template <typename Rng>
double StandardNormal(Rng& rng) {
  while (true) {
    const double u = 2.0 * Uniform01(rng) - 1.0;
    const double v = 2.0 * Uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

}  // namespace ppate

#endif  // PPATE_RANDOM_HPP_
