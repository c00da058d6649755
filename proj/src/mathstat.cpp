/*
 * Prior-Knowledge Brain Tumor Segmentation Toolkit (pbts)
 *
 * Copyright 2026 The pbts Authors
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

#include "pbts/mathstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbts/errors.hpp"

namespace pbts {

namespace {
constexpr double kSqrt2Pi = 2.506628274631000502;

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}
} // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw InputError("regularized_gamma_p: a must be positive");
  if (x < 0.0) throw InputError("regularized_gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_cdf(double x, int dof) {
  if (dof < 1) throw InputError("chi2_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, int dof) {
  if (p <= 0.0 || p >= 1.0) throw InputError("chi2_quantile: p must be in (0, 1)");
  if (dof < 1) throw InputError("chi2_quantile: dof must be >= 1");
  // bracket then bisect; monotone CDF makes this robust
  double lo = 0.0;
  double hi = static_cast<double>(dof);
  while (chi2_cdf(hi, dof) < p) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, dof) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InputError("sorted_quantile: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

SampleMoments sample_moments(const std::vector<double>& values) {
  SampleMoments m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return m;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    ss += d * d;
  }
  m.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return m;
}

} // namespace pbts
