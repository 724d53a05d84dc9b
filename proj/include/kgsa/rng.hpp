/*
 * Copyright 2026 The kgsa Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace kgsa {

/// Counter-based generator (Philox4x32-10).
///
/// A stream is identified by (seed, stream id). Substreams are derived by
/// hashing tags into a fresh stream id, so results never depend on the order
/// in which parallel workers consume randomness. All distribution sampling is
/// implemented here rather than through <random> so that draws are identical
/// across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent generator keyed by the current stream and the given tags.
  [[nodiscard]] Rng substream(std::initializer_list<std::uint64_t> tags) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1); safe for quantile transforms.
  double uniform_open();
  double uniform(double a, double b);
  double normal();
  double normal(double mean, double sd);
  bool bernoulli(double p);
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int next_word_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer; also used to derive stream ids and config hashes.
std::uint64_t mix64(std::uint64_t x);

// Stream tags for the estimators; combined with subset bits and replicate ids.
namespace stream_tag {
inline constexpr std::uint64_t kSampling = 0x51;
inline constexpr std::uint64_t kModel = 0x52;
inline constexpr std::uint64_t kDoubleLoop = 0x53;
inline constexpr std::uint64_t kPickFreeze = 0x54;
inline constexpr std::uint64_t kKnn = 0x55;
inline constexpr std::uint64_t kPermutation = 0x56;
inline constexpr std::uint64_t kZeroMean = 0x57;
inline constexpr std::uint64_t kReplicate = 0x58;
inline constexpr std::uint64_t kNull = 0x59;
}  // namespace stream_tag

}  // namespace kgsa
