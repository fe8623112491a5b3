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

#include "skytrace/rng.hpp"

namespace skytrace::gev {

struct OutOfSupport : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FitDiverged : std::runtime_error {
  FitDiverged(const std::string& what, double location, double scale, double shape)
      : std::runtime_error(what), location(location), scale(scale), shape(shape) {}
  double location, scale, shape;  // best iterate so far
};

// Three-parameter generalized extreme value family. |shape| below this
// threshold takes the Gumbel-limit branch.
constexpr double kGumbelEps = 1e-9;

struct GevParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;
};

double gev_pdf(const GevParams& p, double x);       // 0 outside the support
double gev_cdf(const GevParams& p, double x);
double gev_quantile(const GevParams& p, double prob);  // throws OutOfSupport
double gev_neg_log_likelihood(const GevParams& p, const std::vector<double>& samples);

// Maximum likelihood via a Nelder-Mead simplex on (location, log scale,
// shape), started from probability-weighted-moment estimates. Deterministic
// for a given sample set.
GevParams fit_gev(const std::vector<double>& samples);  // throws FitDiverged
GevParams pwm_initial(const std::vector<double>& samples);

std::vector<double> gev_sample(const GevParams& p, size_t n, uint64_t seed);

// Gaussian kernel density over the sample set.
struct KernelFit {
  std::vector<double> samples;
  double bandwidth = 0.0;

  double pdf(double x) const;
  double log_likelihood() const;
};

// Silverman's rule when bandwidth is unset (<= 0).
KernelFit fit_kernel(const std::vector<double>& samples, double bandwidth = 0.0);

std::vector<double> kernel_sample(const KernelFit& fit, size_t n, uint64_t seed);

}  // namespace skytrace::gev
