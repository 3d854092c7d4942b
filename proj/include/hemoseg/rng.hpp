/* Copyright 2026 The hemoseg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace hemoseg {

/// Philox4x32-10 counter-based generator. Output is a pure function of
/// (key, counter), so any voxel's random numbers can be drawn independently
/// and in any order.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(Key key) : key_(key) {}
  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block counter) const {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                 static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

  /// Block for a (position, stream) pair.
  Block at(std::uint64_t position, std::uint32_t stream) const {
    return (*this)(Block{static_cast<std::uint32_t>(position),
                         static_cast<std::uint32_t>(position >> 32), stream, 0});
  }

  /// Two independent standard normals for (position, stream), via Box-Muller.
  std::pair<double, double> normal_pair(std::uint64_t position, std::uint32_t stream) const {
    const Block b = at(position, stream);
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (to_unit(b[0], b[1]) + 0.5) * kScale53;
    const double u2 = to_unit(b[2], b[3]) * kScale53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  /// Uniform double in [0, 1) for (position, stream).
  double uniform(std::uint64_t position, std::uint32_t stream) const {
    const Block b = at(position, stream);
    return to_unit(b[0], b[1]) * kScale53;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  static constexpr double kScale53 = 1.0 / 9007199254740992.0;  // 2^-53

  // 53-bit integer from two words.
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    return static_cast<double>((static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6));
  }

  Key key_;
};

}  // namespace hemoseg
