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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "skytrace/gev.hpp"
#include "skytrace/stats.hpp"

using namespace skytrace;
using namespace skytrace::gev;

namespace {

// Adaptive Simpson quadrature; the independent oracle for the cdf.
double simpson(const std::function<double(double)>& f, double a, double b, int depth,
               double fa, double fb, double fm, double whole) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 1e-10) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, depth - 1, fa, fm, flm, left) +
         simpson(f, m, b, depth - 1, fm, fb, frm, right);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, 30, fa, fb, fm, whole);
}

}  // namespace

TEST_CASE("Gumbel limit identities") {
  GevParams gumbel{0.3, 0.7, 0.0};
  // pdf at the location is e^{-1}/scale
  CHECK(std::fabs(gev_pdf(gumbel, 0.3) - std::exp(-1.0) / 0.7) < 1e-12);
  // cdf at the location is e^{-1}
  CHECK(gev_cdf(gumbel, 0.3) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // the |shape| < 1e-9 branch joins continuously
  GevParams near_zero{0.3, 0.7, 1e-10};
  CHECK(gev_pdf(near_zero, 1.1) == doctest::Approx(gev_pdf(gumbel, 1.1)).epsilon(1e-6));
}

TEST_CASE("quantile inverts the cdf to 1e-10") {
  for (GevParams p : {GevParams{0.15, 0.02, 0.1}, GevParams{0.0, 1.0, -0.2},
                      GevParams{2.0, 0.5, 0.0}}) {
    for (double prob : {0.1, 0.5, 0.9}) {
      CHECK(std::fabs(gev_cdf(p, gev_quantile(p, prob)) - prob) < 1e-10);
    }
  }
  CHECK_THROWS_AS(gev_quantile({0, 1, 0.1}, 0.0), OutOfSupport);
  CHECK_THROWS_AS(gev_quantile({0, 1, 0.1}, 1.0), OutOfSupport);
  CHECK_THROWS_AS(gev_pdf({0, -1, 0.1}, 0.5), OutOfSupport);
}

TEST_CASE("cdf matches the numerically integrated pdf (quadrature oracle)") {
  GevParams p{0.0, 1.0, 0.2};
  double lower = -1.0 / 0.2 + 1e-9;  // support edge for positive shape
  for (double x : {-3.0, -1.0, 0.0, 0.5, 1.5, 4.0}) {
    double numeric = integrate([&](double t) { return gev_pdf(p, t); }, lower, x);
    CHECK(std::fabs(numeric - gev_cdf(p, x)) < 1e-6);
  }
  // outside the support the density vanishes and the cdf saturates
  CHECK(gev_pdf(p, -6.0) == 0.0);
  CHECK(gev_cdf(p, -6.0) == 0.0);
  GevParams neg{0.0, 1.0, -0.4};
  CHECK(gev_cdf(neg, 10.0) == 1.0);
  CHECK(gev_pdf(neg, 10.0) == 0.0);
}

TEST_CASE("cdf is monotone and the kernel density non-negative") {
  for (GevParams p : {GevParams{0.15, 0.02, 0.1}, GevParams{0.0, 1.0, -0.3},
                      GevParams{1.0, 0.5, 0.0}}) {
    double prev = 0.0;
    for (double x = p.location - 6.0 * p.scale; x <= p.location + 12.0 * p.scale;
         x += p.scale / 8.0) {
      double c = gev_cdf(p, x);
      CHECK(c >= prev);
      CHECK(c <= 1.0);
      prev = c;
    }
  }
  Rng rng(77);
  std::vector<double> samples;
  for (int i = 0; i < 500; ++i) samples.push_back(rng.normal(3.0, 0.4));
  KernelFit fit = fit_kernel(samples);
  for (double x = -2.0; x <= 8.0; x += 0.05) CHECK(fit.pdf(x) >= 0.0);
}

TEST_CASE("pdf integrates to 1") {
  for (GevParams p : {GevParams{0.15, 0.02, 0.1}, GevParams{0.0, 1.0, 0.0}}) {
    double lo = gev_quantile(p, 1e-12);
    double hi = gev_quantile(p, 1.0 - 1e-13);
    double mass = integrate([&](double t) { return gev_pdf(p, t); }, lo, hi);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("fit recovers parameters from inverse-CDF draws") {
  GevParams truth{0.15, 0.02, 0.1};
  auto draws = gev_sample(truth, 10000, 777);
  GevParams fitted = fit_gev(draws);
  CHECK(std::fabs(fitted.location - truth.location) / truth.location < 0.05);
  CHECK(std::fabs(fitted.scale - truth.scale) / truth.scale < 0.05);
  CHECK(std::fabs(fitted.shape - truth.shape) < 0.05);

  // the MLE should not be worse than the PWM start
  GevParams start = pwm_initial(draws);
  CHECK(gev_neg_log_likelihood(fitted, draws) <= gev_neg_log_likelihood(start, draws) + 1e-9);
}

TEST_CASE("fit then resample then refit is stable within 10%") {
  GevParams truth{0.36, 0.05, 0.05};
  auto draws = gev_sample(truth, 8000, 123);
  GevParams fit1 = fit_gev(draws);
  auto synthetic = gev_sample(fit1, 8000, 456);
  GevParams fit2 = fit_gev(synthetic);
  CHECK(std::fabs(fit2.location - fit1.location) / std::fabs(fit1.location) < 0.10);
  CHECK(std::fabs(fit2.scale - fit1.scale) / fit1.scale < 0.10);
}

TEST_CASE("constant samples diverge loudly") {
  std::vector<double> flat(500, 0.25);
  CHECK_THROWS_AS(fit_gev(flat), FitDiverged);
}

TEST_CASE("sampling is seeded and deterministic") {
  GevParams p{0.15, 0.02, 0.1};
  CHECK(gev_sample(p, 100, 9) == gev_sample(p, 100, 9));
  CHECK(gev_sample(p, 0, 9).empty());
  CHECK(gev_sample(p, 100, 9) != gev_sample(p, 100, 10));
}

TEST_CASE("kernel density: Silverman bandwidth, normalization, bimodality") {
  // two well-separated clusters
  std::vector<double> samples;
  Rng rng(55);
  for (int i = 0; i < 2000; ++i) samples.push_back(rng.normal(0.0, 0.05));
  for (int i = 0; i < 2000; ++i) samples.push_back(rng.normal(1.0, 0.05));
  KernelFit fit = fit_kernel(samples);
  CHECK(fit.bandwidth > 0.0);

  // density integrates to 1 over a padded grid
  double lo = -0.5, hi = 1.5;
  int grid = 4096;
  double mass = 0.0;
  double prev = fit.pdf(lo);
  for (int i = 1; i <= grid; ++i) {
    double x = lo + (hi - lo) * i / grid;
    double cur = fit.pdf(x);
    mass += 0.5 * (prev + cur) * (hi - lo) / grid;
    prev = cur;
  }
  CHECK(std::fabs(mass - 1.0) < 1e-3);

  // two local maxima with a valley between
  double at0 = fit.pdf(0.0), at_half = fit.pdf(0.5), at1 = fit.pdf(1.0);
  CHECK(at0 > at_half);
  CHECK(at1 > at_half);
  CHECK(fit.pdf(0.0) > 0.0);
}

TEST_CASE("kernel density of uniform samples is near 1 on the interior") {
  Rng rng(66);
  std::vector<double> samples;
  for (int i = 0; i < 10000; ++i) samples.push_back(rng.uniform());
  KernelFit fit = fit_kernel(samples);
  for (double x = 0.2; x <= 0.8001; x += 0.1) {
    CHECK(std::fabs(fit.pdf(x) - 1.0) < 0.1);
  }
}

TEST_CASE("single repeated sample keeps a single peak at that value") {
  std::vector<double> samples(50, 3.25);
  KernelFit fit = fit_kernel(samples);  // bandwidth floors at a tiny positive value
  CHECK(fit.pdf(3.25) > fit.pdf(3.30));
  CHECK(fit.pdf(3.25) > fit.pdf(3.20));
}

TEST_CASE("kernel resampling is seeded") {
  std::vector<double> samples{0.1, 0.2, 0.3, 0.4};
  KernelFit fit = fit_kernel(samples);
  CHECK(kernel_sample(fit, 32, 4) == kernel_sample(fit, 32, 4));
}

TEST_CASE("summary statistics") {
  using stats::summarize;
  CHECK_THROWS_AS(summarize({1.0}), stats::InsufficientSamples);

  auto s1 = summarize({1.0, 1.0, 1.0});
  CHECK(s1.mean == 1.0);
  CHECK(s1.variance == 0.0);

  auto s2 = summarize({1.0, 3.0});
  CHECK(s2.mean == 2.0);
  CHECK(s2.variance == 2.0);  // unbiased
  CHECK(s2.min == 1.0);
  CHECK(s2.max == 3.0);

  // seeded sampler oracle: 1e4 draws from Normal(0.5, 0.01)
  Rng rng(31);
  std::vector<double> normals;
  for (int i = 0; i < 10000; ++i) normals.push_back(rng.normal(0.5, 0.01));
  auto s3 = summarize(normals);
  CHECK(std::fabs(s3.mean - 0.5) < 0.001);
  CHECK(s3.min <= s3.p50);
  CHECK(s3.p50 <= s3.p95);
  CHECK(s3.p95 <= s3.p99);
  CHECK(s3.p99 <= s3.max);
}
