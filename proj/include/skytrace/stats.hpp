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

#include <stdexcept>
#include <vector>

namespace skytrace::stats {

struct InsufficientSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SummaryStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double min = 0.0;
  double max = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
};

// Percentiles use linear interpolation between order statistics.
SummaryStats summarize(const std::vector<double>& samples);  // needs >= 2
double percentile(std::vector<double> sorted_samples, double q);

}  // namespace skytrace::stats
