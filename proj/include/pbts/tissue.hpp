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

#ifndef PBTS_TISSUE_HPP
#define PBTS_TISSUE_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pbts/stats.hpp"
#include "pbts/study.hpp"
#include "pbts/volume.hpp"

namespace pbts {

enum class TissueClass : int { WM = 0, GM = 1, CSF = 2, Other = 3 };
inline constexpr int kNumTissueClasses = 4;
std::string to_string(TissueClass c);

/// Per-class probability volumes over {WM, GM, CSF, other}. Values are
/// defined (and normalized to sum 1) inside the brain mask; 0 outside.
struct ProbabilityMap {
  Grid grid;
  std::vector<std::uint8_t> brain_mask;
  std::array<std::vector<double>, kNumTissueClasses> classes;

  static ProbabilityMap zeros(const Grid& g, const std::vector<std::uint8_t>& mask);

  std::vector<double>& of(TissueClass c) { return classes[static_cast<std::size_t>(c)]; }
  const std::vector<double>& of(TissueClass c) const {
    return classes[static_cast<std::size_t>(c)];
  }

  /// Largest |per-voxel class sum - 1| inside the brain mask.
  double max_sum_deviation() const;

  /// ScalarVolume view of one class (shares the brain mask).
  ScalarVolume to_volume(TissueClass c) const;
};

struct TissuePipelineConfig {
  int iterations = 3;
  double posterior_threshold = 0.5;
  double posterior_smoothing_sigma_mm = 1.0;
  double csf_prior_value = 0.9;
  double other_prior_value = 0.5;
  double other_prior_floor = 1e-3; // OTHER prior inside the CSF-dark region
  std::size_t kde_samples_per_class = 10000;
  int kde_grid_points = 512;          // CSF-threshold curve resolution
  double peak_height_fraction = 0.05; // peak significance for CSF detection
  int density_table_points = 2048;    // tabulated KDE resolution
  RobustConfig robust;
  bool record_iterations = false; // keep per-iteration posteriors (debug)
};

struct TissueIterationRecord {
  std::array<std::size_t, kNumTissueClasses> sample_count{};
  std::array<std::size_t, kNumTissueClasses> retained_count{};
  double wm_inlier_fraction = 1.0;
  double gm_inlier_fraction = 1.0;
  double mean_posterior_change = 0.0;
  double max_sum_deviation = 0.0;
};

struct TissueReport {
  CsfThreshold csf_threshold;
  std::vector<TissueIterationRecord> iterations;
  std::vector<std::string> warnings;
  std::vector<ProbabilityMap> iteration_posteriors; // only with record_iterations
};

struct TissueResult {
  ProbabilityMap posterior; // after the final averaging, before smoothing
  LabelVolume wm_mask, gm_mask, csf_mask;
  CsfThreshold csf_threshold;
  std::map<Modality, MaskedStats> wm_stats; // per modality, over wm_mask
  std::map<Modality, MaskedStats> gm_stats;
  TissueReport report;

  const std::map<Modality, MaskedStats>& stats_for(TissueClass ref) const;
};

/// Prior initialization: atlas WM/GM, FLAIR-threshold CSF (Pr = 0.9 below
/// th), uniform OTHER (0.5) elsewhere; per-voxel normalization.
std::pair<ProbabilityMap, CsfThreshold> initialize_priors(const Study& study,
                                                          const ScalarVolume& atlas_wm,
                                                          const ScalarVolume& atlas_gm,
                                                          const TissuePipelineConfig& cfg);

/// Voxelwise Bayes posterior for one scan:
///   Pr(Y|x) = p(x|Y) Pr(Y) / sum_Y' p(x|Y') Pr(Y').
/// Voxels where the evidence underflows (evidence times the scan's brain
/// intensity range below 1e-12) keep their prior.
ProbabilityMap bayes_update(const std::array<DensityFn, kNumTissueClasses>& likelihoods,
                            const ProbabilityMap& prior, const ScalarVolume& scan);

/// Full iterative tissue segmentation (priors -> {sample, MCD-filter, KDE,
/// Bayes, average} x iterations -> smoothed 0.5-threshold masks).
TissueResult run_tissue_segmentation(const Study& study, const ScalarVolume& atlas_wm,
                                     const ScalarVolume& atlas_gm, const TissuePipelineConfig& cfg,
                                     std::uint64_t seed = 0);

} // namespace pbts

#endif
