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

#include "skytrace/stats.hpp"

#include <algorithm>
#include <cmath>

namespace skytrace::stats {

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) throw InsufficientSamples("percentile of empty sample set");
  double h = q * (sorted.size() - 1);
  size_t lo = static_cast<size_t>(h);
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(const std::vector<double>& samples) {
  if (samples.size() < 2) {
    throw InsufficientSamples("summary statistics need at least 2 samples");
  }
  SummaryStats s;
  double acc = 0.0;
  for (double x : samples) acc += x;
  s.mean = acc / samples.size();
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / (samples.size() - 1);

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p50 = percentile(sorted, 0.50);
  s.p95 = percentile(sorted, 0.95);
  s.p99 = percentile(sorted, 0.99);
  return s;
}

}  // namespace skytrace::stats
