/*
   Copyright 2026 the skytrace authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace skytrace {

// Seeded RNG with hand-rolled variate transforms. std::mt19937_64 output is
// specified by the standard, the std::*_distribution adaptors are not, so
// every transform lives here to keep runs byte-identical across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  uint64_t uniform_u64(uint64_t n) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double lognormal(double log_mean, double log_stddev) {
    return std::exp(log_mean + log_stddev * normal());
  }

  // Inverse-CDF triangular draw on [lo, hi] with the given mode. Monotone in
  // each parameter for a fixed uniform draw.
  double triangular(double lo, double mode, double hi) {
    double u = uniform();
    double span = hi - lo;
    if (span <= 0.0) return lo;
    double cut = (mode - lo) / span;
    if (u < cut) return lo + std::sqrt(u * span * (mode - lo));
    return hi - std::sqrt((1.0 - u) * span * (hi - mode));
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace skytrace
