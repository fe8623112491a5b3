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

#include "skytrace/gev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace skytrace::gev {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool gumbel_branch(double shape) {
  return std::fabs(shape) < kGumbelEps;
}

}  // namespace

double gev_pdf(const GevParams& p, double x) {
  if (p.scale <= 0.0) throw OutOfSupport("scale must be positive");
  double z = (x - p.location) / p.scale;
  if (gumbel_branch(p.shape)) {
    double t = std::exp(-z);
    return t * std::exp(-t) / p.scale;
  }
  double arg = 1.0 + p.shape * z;
  if (arg <= 0.0) return 0.0;
  double t = std::pow(arg, -1.0 / p.shape);
  return std::pow(arg, -1.0 - 1.0 / p.shape) * std::exp(-t) / p.scale;
}

double gev_cdf(const GevParams& p, double x) {
  if (p.scale <= 0.0) throw OutOfSupport("scale must be positive");
  double z = (x - p.location) / p.scale;
  if (gumbel_branch(p.shape)) {
    return std::exp(-std::exp(-z));
  }
  double arg = 1.0 + p.shape * z;
  if (arg <= 0.0) return p.shape > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(arg, -1.0 / p.shape));
}

double gev_quantile(const GevParams& p, double prob) {
  if (p.scale <= 0.0) throw OutOfSupport("scale must be positive");
  if (prob <= 0.0 || prob >= 1.0) throw OutOfSupport("probability must lie in (0, 1)");
  double ln = -std::log(prob);
  if (gumbel_branch(p.shape)) {
    return p.location - p.scale * std::log(ln);
  }
  return p.location + p.scale * (std::pow(ln, -p.shape) - 1.0) / p.shape;
}

double gev_neg_log_likelihood(const GevParams& p, const std::vector<double>& samples) {
  if (p.scale <= 0.0) return kInf;
  double nll = samples.size() * std::log(p.scale);
  for (double x : samples) {
    double z = (x - p.location) / p.scale;
    if (gumbel_branch(p.shape)) {
      nll += z + std::exp(-z);
      continue;
    }
    double arg = 1.0 + p.shape * z;
    if (arg <= 0.0) return kInf;  // sample outside the support
    nll += (1.0 + 1.0 / p.shape) * std::log(arg) + std::pow(arg, -1.0 / p.shape);
  }
  return nll;
}

// Hosking's probability-weighted-moment estimator. Hosking's shape sign is
// the negative of the convention used here.
GevParams pwm_initial(const std::vector<double>& samples) {
  size_t n = samples.size();
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double x = sorted[i];
    b0 += x;
    if (n > 1) b1 += x * static_cast<double>(i) / (n - 1);
    if (n > 2) b2 += x * static_cast<double>(i) * (i - 1.0) / ((n - 1.0) * (n - 2.0));
  }
  b0 /= n;
  b1 /= n;
  b2 /= n;
  double l1 = b0;
  double l2 = 2.0 * b1 - b0;
  double l3 = 6.0 * b2 - 6.0 * b1 + b0;
  if (l2 <= 1e-12 * std::max(1.0, std::fabs(l1))) {
    throw FitDiverged("degenerate sample: zero dispersion", l1, 0.0, 0.0);
  }
  double t3 = l3 / l2;
  double c = 2.0 / (3.0 + t3) - std::log(2.0) / std::log(3.0);
  double k_hosking = 7.8590 * c + 2.9554 * c * c;
  double shape = -k_hosking;

  double scale, location;
  if (std::fabs(k_hosking) < 1e-6) {
    scale = l2 / std::log(2.0);
    location = l1 - 0.57721566490153286 * scale;  // Euler-Mascheroni
  } else {
    double gamma_term = std::tgamma(1.0 + k_hosking);
    scale = l2 * k_hosking / ((1.0 - std::pow(2.0, -k_hosking)) * gamma_term);
    location = l1 - scale * (1.0 - gamma_term) / k_hosking;
  }
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(location) ||
      !std::isfinite(shape)) {
    throw FitDiverged("probability-weighted moments diverged", location, scale, shape);
  }
  return {location, scale, shape};
}

namespace {

struct Simplex {
  // Points are (location, log scale, shape).
  using Point = std::array<double, 3>;

  static GevParams to_params(const Point& x) {
    return {x[0], std::exp(x[1]), x[2]};
  }
};

}  // namespace

GevParams fit_gev(const std::vector<double>& samples) {
  if (samples.size() < 2) {
    throw FitDiverged("need at least 2 samples", samples.empty() ? 0.0 : samples[0], 0.0, 0.0);
  }
  auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*hi_it - *lo_it <= 0.0) {
    throw FitDiverged("degenerate sample: zero dispersion", *lo_it, 0.0, 0.0);
  }
  GevParams init = pwm_initial(samples);

  auto objective = [&samples](const Simplex::Point& x) {
    if (x[1] > 700.0 || x[1] < -700.0) return kInf;
    return gev_neg_log_likelihood(Simplex::to_params(x), samples);
  };

  // Nelder-Mead with standard coefficients.
  std::array<Simplex::Point, 4> pts;
  pts[0] = {init.location, std::log(init.scale), init.shape};
  pts[1] = {init.location + 0.1 * init.scale, std::log(init.scale), init.shape};
  pts[2] = {init.location, std::log(init.scale) + 0.1, init.shape};
  pts[3] = {init.location, std::log(init.scale), init.shape + 0.1};
  std::array<double, 4> vals;
  for (size_t i = 0; i < 4; ++i) vals[i] = objective(pts[i]);

  auto order = [&] {
    std::array<size_t, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    std::array<Simplex::Point, 4> np;
    std::array<double, 4> nv;
    for (size_t i = 0; i < 4; ++i) {
      np[i] = pts[idx[i]];
      nv[i] = vals[idx[i]];
    }
    pts = np;
    vals = nv;
  };

  constexpr int kMaxIter = 2000;
  constexpr double kTol = 1e-10;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    order();
    if (std::isfinite(vals[0]) && std::fabs(vals[3] - vals[0]) < kTol * (std::fabs(vals[0]) + 1.0)) {
      break;
    }
    Simplex::Point centroid{0, 0, 0};
    for (size_t i = 0; i < 3; ++i) {
      for (size_t d = 0; d < 3; ++d) centroid[d] += pts[i][d] / 3.0;
    }
    auto blend = [&](double coef) {
      Simplex::Point p;
      for (size_t d = 0; d < 3; ++d) p[d] = centroid[d] + coef * (pts[3][d] - centroid[d]);
      return p;
    };
    Simplex::Point reflect = blend(-1.0);
    double fr = objective(reflect);
    if (fr < vals[0]) {
      Simplex::Point expand = blend(-2.0);
      double fe = objective(expand);
      if (fe < fr) {
        pts[3] = expand;
        vals[3] = fe;
      } else {
        pts[3] = reflect;
        vals[3] = fr;
      }
    } else if (fr < vals[2]) {
      pts[3] = reflect;
      vals[3] = fr;
    } else {
      Simplex::Point contract = blend(fr < vals[3] ? -0.5 : 0.5);
      double fc = objective(contract);
      if (fc < std::min(fr, vals[3])) {
        pts[3] = contract;
        vals[3] = fc;
      } else {
        for (size_t i = 1; i < 4; ++i) {
          for (size_t d = 0; d < 3; ++d) pts[i][d] = pts[0][d] + 0.5 * (pts[i][d] - pts[0][d]);
          vals[i] = objective(pts[i]);
        }
      }
    }
  }
  order();
  GevParams best = Simplex::to_params(pts[0]);
  if (!std::isfinite(vals[0]) || !(best.scale > 0.0)) {
    throw FitDiverged("likelihood failed to converge", best.location, best.scale, best.shape);
  }
  return best;
}

std::vector<double> gev_sample(const GevParams& p, size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    // open interval: keep the quantile finite
    u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
    out.push_back(gev_quantile(p, u));
  }
  return out;
}

// --- kernel density ----------------------------------------------------------

double KernelFit::pdf(double x) const {
  if (samples.empty() || bandwidth <= 0.0) return 0.0;
  constexpr double kInvSqrt2Pi = 0.398942280401432677939946;
  double acc = 0.0;
  for (double s : samples) {
    double z = (x - s) / bandwidth;
    acc += std::exp(-0.5 * z * z);
  }
  return acc * kInvSqrt2Pi / (samples.size() * bandwidth);
}

double KernelFit::log_likelihood() const {
  double acc = 0.0;
  for (double s : samples) acc += std::log(std::max(pdf(s), 1e-300));
  return acc;
}

KernelFit fit_kernel(const std::vector<double>& samples, double bandwidth) {
  if (samples.size() < 1) throw std::invalid_argument("kernel fit needs samples");
  KernelFit fit;
  fit.samples = samples;
  if (bandwidth > 0.0) {
    fit.bandwidth = bandwidth;
    return fit;
  }
  size_t n = samples.size();
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var = n > 1 ? var / (n - 1) : 0.0;
  double sd = std::sqrt(var);

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    double h = q * (n - 1);
    size_t lo = static_cast<size_t>(h);
    size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
  };
  double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1e-6;
  fit.bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (fit.bandwidth <= 0.0) fit.bandwidth = 1e-6;
  return fit;
}

std::vector<double> kernel_sample(const KernelFit& fit, size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double base = fit.samples[rng.uniform_u64(fit.samples.size())];
    out.push_back(base + fit.bandwidth * rng.normal());
  }
  return out;
}

}  // namespace skytrace::gev
