/*
 Copyright 2026 The trmjls Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace trmjls {

/// Stream-splitting hash (SplitMix64). Used to derive independent substream
/// seeds from a master seed, so results are reproducible for a fixed seed
/// and worker count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// RNG algorithm identifier recorded in simulation metadata.
inline constexpr const char* kRngAlgorithm = "mt19937_64+splitmix64+box-muller";

/// mt19937_64 with an explicit Box-Muller transform, so normal draws do not
/// depend on the standard library's normal_distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(splitmix64(seed ^ splitmix64(stream))) {}

  /// Uniform in (0, 1].
  double uniform() {
    // 53-bit mantissa; shifted away from 0 so log() below is safe.
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  /// Index into a discrete distribution given by a probability vector.
  template <typename Vec>
  int sample_index(const Vec& probs) {
    double u = uniform();
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      u -= probs[i];
      if (u <= 0.0) return i;
    }
    // Guard against roundoff: fall back to the last positive entry.
    for (int i = n - 1; i >= 0; --i) {
      if (probs[i] > 0.0) return i;
    }
    return n - 1;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace trmjls
