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

#ifndef PBTS_MATHSTAT_HPP
#define PBTS_MATHSTAT_HPP

#include <cstddef>
#include <vector>

namespace pbts {

/// Standard normal probability density.
double normal_pdf(double z);

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

/// Chi-square CDF with dof degrees of freedom.
double chi2_cdf(double x, int dof);

/// Chi-square quantile (inverse CDF), p in (0, 1).
double chi2_quantile(double p, int dof);

/// Linear-interpolation sample quantile (the common "type 7" definition)
/// of an already sorted vector, p in [0, 1].
double sorted_quantile(const std::vector<double>& sorted, double p);

/// Sample mean and standard deviation (n-1 denominator; std = 0 for n = 1).
struct SampleMoments {
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};
SampleMoments sample_moments(const std::vector<double>& values);

} // namespace pbts

#endif
