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

#ifndef PBTS_STATS_HPP
#define PBTS_STATS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pbts/volume.hpp"

namespace pbts {

/// Evaluable 1-D probability density. Implementations include Gaussian KDE
/// models, their tabulated approximations, and analytic test densities.
using DensityFn = std::function<double(double)>;

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

/// Gaussian kernel density estimate over 1-D intensity samples.
struct DensityModel {
  std::vector<double> samples;
  double bandwidth = 0.0;

  /// Exact evaluation: mean of Gaussian kernels, O(n) per point.
  double evaluate(double x) const;

  /// Linear-interpolation table over [min - 6h, max + 6h]; 0 outside.
  /// Used in voxelwise inner loops where exact evaluation is too slow.
  DensityFn tabulated(int grid_points = 2048) const;
};

/// Fits a Gaussian KDE. When bandwidth is absent, Silverman's rule
/// 0.9 * min(std, IQR/1.34) * n^(-1/5) is used, floored at 1e-6 * range.
/// Requires at least 2 distinct samples.
DensityModel kde_fit(std::vector<double> samples, std::optional<double> bandwidth = std::nullopt);

// ---------------------------------------------------------------------------
// FLAIR CSF-threshold detection
// ---------------------------------------------------------------------------

struct CsfThreshold {
  double th = 0.0;              // = valley_location
  double peak_location = 0.0;   // CSF (leftmost significant) KDE peak
  double valley_location = 0.0; // first valley right of the CSF peak
};

/// Fits a KDE to brain-interior FLAIR intensities, evaluates it on a uniform
/// grid over [min, max], takes the leftmost local maximum with height
/// >= peak_height_fraction of the global maximum as the CSF peak, and returns
/// the valley between it and the next significant peak. Throws StageError
/// when the density has no second significant mode (no CSF valley).
CsfThreshold detect_csf_threshold(const ScalarVolume& flair, int grid_points = 512,
                                  double peak_height_fraction = 0.05,
                                  std::optional<double> bandwidth = std::nullopt);

// ---------------------------------------------------------------------------
// Probability-weighted voxel sampling
// ---------------------------------------------------------------------------

/// Draws n voxel linear indices with replacement, selection probability
/// proportional to prob (restricted to mask voxels). Deterministic for a
/// fixed seed. Throws when the probability field sums to zero.
std::vector<std::size_t> sample_voxel_indices(const std::vector<double>& prob,
                                              const std::vector<std::uint8_t>& mask, std::size_t n,
                                              std::uint64_t seed);

/// Intensity values of voxels drawn by sample_voxel_indices on vol's grid.
std::vector<double> sample_by_probability(const ScalarVolume& vol, const std::vector<double>& prob,
                                          std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Minimum Covariance Determinant outlier filtering
// ---------------------------------------------------------------------------

struct RobustConfig {
  double support_fraction = 0.5; // in [0.5, 1]
  int max_iterations = 100;      // concentration-step cap per start
  std::uint64_t seed = 0;
  int num_starts = 500; // random h-subset restarts
};

struct McdResult {
  std::vector<std::uint8_t> inliers; // 1 = squared Mahalanobis distance within cutoff
  std::vector<double> center;        // d
  std::vector<double> covariance;    // d x d row-major, consistency-corrected
  double subset_det = 0.0;           // determinant of the winning h-subset's raw covariance
  std::vector<std::size_t> support;  // winning h-subset (sorted indices)
};

/// FAST-MCD style search: random h-subsets, concentration steps until the
/// determinant stops decreasing, best of num_starts restarts (economy scheme:
/// two steps everywhere, the 10 best iterated to convergence). Inliers are
/// points whose squared Mahalanobis distance to the consistency-corrected
/// estimate is within the chi-square 97.5% quantile (d dof). Deterministic
/// for a fixed seed.
///
/// points: flat row-major n x dim array.
McdResult mcd_filter(const std::vector<double>& points, int dim, const RobustConfig& cfg);

} // namespace pbts

#endif
