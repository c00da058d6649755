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

#include "pbts/tissue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbts/errors.hpp"
#include "pbts/rng.hpp"

namespace pbts {

std::string to_string(TissueClass c) {
  switch (c) {
  case TissueClass::WM: return "WM";
  case TissueClass::GM: return "GM";
  case TissueClass::CSF: return "CSF";
  case TissueClass::Other: return "other";
  }
  return "?";
}

ProbabilityMap ProbabilityMap::zeros(const Grid& g, const std::vector<std::uint8_t>& mask) {
  ProbabilityMap m;
  m.grid = g;
  m.brain_mask = mask;
  for (auto& c : m.classes) c.assign(g.voxel_count(), 0.0);
  return m;
}

double ProbabilityMap::max_sum_deviation() const {
  double worst = 0.0;
  for (std::size_t v = 0; v < brain_mask.size(); ++v) {
    if (!brain_mask[v]) continue;
    double sum = 0.0;
    for (const auto& c : classes) sum += c[v];
    worst = std::max(worst, std::fabs(sum - 1.0));
  }
  return worst;
}

ScalarVolume ProbabilityMap::to_volume(TissueClass c) const {
  ScalarVolume vol;
  vol.grid = grid;
  vol.data = of(c);
  vol.brain_mask = brain_mask;
  return vol;
}

const std::map<Modality, MaskedStats>& TissueResult::stats_for(TissueClass ref) const {
  if (ref == TissueClass::WM) return wm_stats;
  if (ref == TissueClass::GM) return gm_stats;
  throw InputError("reference stats are only kept for WM and GM");
}

// ---------------------------------------------------------------------------
// Prior initialization
// ---------------------------------------------------------------------------

std::pair<ProbabilityMap, CsfThreshold> initialize_priors(const Study& study,
                                                          const ScalarVolume& atlas_wm,
                                                          const ScalarVolume& atlas_gm,
                                                          const TissuePipelineConfig& cfg) {
  const Grid& g = study.grid();
  if (!atlas_wm.grid.matches(g) || !atlas_gm.grid.matches(g))
    throw InputError("atlas priors are not on the study grid");
  for (const ScalarVolume* atlas : {&atlas_wm, &atlas_gm}) {
    for (std::size_t v = 0; v < atlas->data.size(); ++v) {
      if (study.brain_mask()[v] && (atlas->data[v] < 0.0 || atlas->data[v] > 1.0))
        throw InputError("atlas prior values must lie in [0, 1]");
    }
  }

  const ScalarVolume& flair = study.scan(Modality::Flair);
  const CsfThreshold th = detect_csf_threshold(flair, cfg.kde_grid_points,
                                               cfg.peak_height_fraction);

  ProbabilityMap prior = ProbabilityMap::zeros(g, study.brain_mask());
  const double eps = cfg.other_prior_floor;
  for (std::size_t v = 0; v < flair.data.size(); ++v) {
    if (!prior.brain_mask[v]) continue;
    const double wm = atlas_wm.data[v];
    const double gm = atlas_gm.data[v];
    const double atlas_sum = wm + gm;
    double p_wm, p_gm, p_csf, p_other;
    if (flair.data[v] < th.th) {
      // CSF-dark region: Pr(CSF) = 0.9, floor-epsilon OTHER, the rest of the
      // residual mass split proportionally to the atlas
      p_csf = cfg.csf_prior_value;
      p_other = eps;
      const double residue = std::max(0.0, 1.0 - p_csf - p_other);
      if (atlas_sum > 0.0) {
        p_wm = residue * wm / atlas_sum;
        p_gm = residue * gm / atlas_sum;
      } else {
        p_wm = p_gm = 0.0;
      }
    } else {
      p_csf = 0.0;
      p_other = cfg.other_prior_value;
      const double residue = std::max(0.0, 1.0 - p_other);
      if (atlas_sum > 0.0) {
        p_wm = residue * wm / atlas_sum;
        p_gm = residue * gm / atlas_sum;
      } else {
        p_wm = p_gm = 0.0;
      }
    }
    const double total = p_wm + p_gm + p_csf + p_other;
    prior.of(TissueClass::WM)[v] = p_wm / total;
    prior.of(TissueClass::GM)[v] = p_gm / total;
    prior.of(TissueClass::CSF)[v] = p_csf / total;
    prior.of(TissueClass::Other)[v] = p_other / total;
  }
  return {std::move(prior), th};
}

// ---------------------------------------------------------------------------
// Bayes update
// ---------------------------------------------------------------------------

ProbabilityMap bayes_update(const std::array<DensityFn, kNumTissueClasses>& likelihoods,
                            const ProbabilityMap& prior, const ScalarVolume& scan) {
  for (const auto& fn : likelihoods) {
    if (!fn) throw InputError("bayes_update: missing class density");
  }
  if (!scan.grid.matches(prior.grid)) throw InputError("bayes_update: grid mismatch");

  // underflow guard on the dimensionless quantity evidence * intensity range,
  // so rescaling a scan by a constant cannot flip the guard decision
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t v = 0; v < scan.data.size(); ++v) {
    if (!prior.brain_mask[v]) continue;
    lo = std::min(lo, scan.data[v]);
    hi = std::max(hi, scan.data[v]);
  }
  const double range = hi > lo ? hi - lo : 0.0;

  ProbabilityMap post = ProbabilityMap::zeros(prior.grid, prior.brain_mask);
  for (std::size_t v = 0; v < scan.data.size(); ++v) {
    if (!prior.brain_mask[v]) continue;
    const double x = scan.data[v];
    double joint[kNumTissueClasses];
    double evidence = 0.0;
    for (int c = 0; c < kNumTissueClasses; ++c) {
      joint[c] = likelihoods[static_cast<std::size_t>(c)](x) * prior.classes[static_cast<std::size_t>(c)][v];
      evidence += joint[c];
    }
    if (evidence * range < 1e-12) {
      for (int c = 0; c < kNumTissueClasses; ++c)
        post.classes[static_cast<std::size_t>(c)][v] = prior.classes[static_cast<std::size_t>(c)][v];
    } else {
      for (int c = 0; c < kNumTissueClasses; ++c)
        post.classes[static_cast<std::size_t>(c)][v] = joint[c] / evidence;
    }
  }
  return post;
}

// ---------------------------------------------------------------------------
// Full tissue segmentation
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<TissueClass, kNumTissueClasses> kAllClasses = {
    TissueClass::WM, TissueClass::GM, TissueClass::CSF, TissueClass::Other};

LabelVolume class_mask_from_smoothed(const std::array<ScalarVolume, kNumTissueClasses>& smoothed,
                                     TissueClass cls, double threshold,
                                     const std::vector<std::uint8_t>& mask) {
  // argmax-with-threshold keeps WM / GM / CSF masks disjoint
  LabelVolume out = LabelVolume::zeros(smoothed[0].grid);
  const std::size_t target = static_cast<std::size_t>(cls);
  for (std::size_t v = 0; v < out.labels.size(); ++v) {
    if (!mask[v]) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumTissueClasses; ++c) {
      if (smoothed[c].data[v] > smoothed[best].data[v]) best = c;
    }
    if (best == target && smoothed[target].data[v] >= threshold) out.labels[v] = 1;
  }
  return out;
}

} // namespace

TissueResult run_tissue_segmentation(const Study& study, const ScalarVolume& atlas_wm,
                                     const ScalarVolume& atlas_gm, const TissuePipelineConfig& cfg,
                                     std::uint64_t seed) {
  if (cfg.iterations < 0) throw InputError("tissue: iterations must be >= 0");
  study.validate();
  const std::vector<Modality> scans = study.tissue_modalities();
  const int num_scans = static_cast<int>(scans.size());
  const std::size_t n_vox = study.grid().voxel_count();

  TissueResult result;
  auto [prior, th] = initialize_priors(study, atlas_wm, atlas_gm, cfg);
  result.csf_threshold = th;
  result.report.csf_threshold = th;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    TissueIterationRecord rec;

    // (a) per-class voxel samples drawn from the current prior; WM and GM
    // samples are decontaminated with a joint multi-modal MCD filter
    std::array<std::vector<std::size_t>, kNumTissueClasses> retained;
    for (const TissueClass cls : kAllClasses) {
      const std::size_t c = static_cast<std::size_t>(cls);
      const std::uint64_t class_seed =
          derive_seed(seed, 1000u * static_cast<std::uint64_t>(iter + 1) + c);
      std::vector<std::size_t> idx = sample_voxel_indices(prior.of(cls), prior.brain_mask,
                                                          cfg.kde_samples_per_class, class_seed);
      rec.sample_count[c] = idx.size();

      if (cls == TissueClass::WM || cls == TissueClass::GM) {
        std::vector<double> pts;
        pts.reserve(idx.size() * static_cast<std::size_t>(num_scans));
        for (const std::size_t v : idx) {
          for (const Modality m : scans) pts.push_back(study.scan(m).data[v]);
        }
        RobustConfig rcfg = cfg.robust;
        rcfg.seed = derive_seed(seed, 2000u * static_cast<std::uint64_t>(iter + 1) + c);
        try {
          const McdResult mcd = mcd_filter(pts, num_scans, rcfg);
          std::vector<std::size_t> kept;
          kept.reserve(idx.size());
          for (std::size_t s = 0; s < idx.size(); ++s) {
            if (mcd.inliers[s]) kept.push_back(idx[s]);
          }
          if (kept.size() < 2) {
            result.report.warnings.push_back("MCD left fewer than 2 " + to_string(cls) +
                                             " samples; using unfiltered samples");
          } else {
            idx = std::move(kept);
          }
        } catch (const Error& e) {
          result.report.warnings.push_back("MCD failed for " + to_string(cls) + " (" + e.what() +
                                           "); using unfiltered samples");
        }
        const double frac = static_cast<double>(idx.size()) / static_cast<double>(rec.sample_count[c]);
        if (cls == TissueClass::WM) rec.wm_inlier_fraction = frac;
        if (cls == TissueClass::GM) rec.gm_inlier_fraction = frac;
      }
      rec.retained_count[c] = idx.size();
      retained[c] = std::move(idx);
    }

    // (b) per-scan per-class KDE on the retained samples
    // (c) Bayes update per scan; (d) average posteriors into the next prior
    ProbabilityMap accum = ProbabilityMap::zeros(prior.grid, prior.brain_mask);
    for (const Modality m : scans) {
      const ScalarVolume& scan_vol = study.scan(m);
      std::array<DensityFn, kNumTissueClasses> densities;
      for (const TissueClass cls : kAllClasses) {
        const std::size_t c = static_cast<std::size_t>(cls);
        std::vector<double> values(retained[c].size());
        for (std::size_t s = 0; s < retained[c].size(); ++s)
          values[s] = scan_vol.data[retained[c][s]];
        densities[c] = kde_fit(std::move(values)).tabulated(cfg.density_table_points);
      }
      const ProbabilityMap post = bayes_update(densities, prior, scan_vol);
      for (std::size_t c = 0; c < kNumTissueClasses; ++c) {
        for (std::size_t v = 0; v < n_vox; ++v) accum.classes[c][v] += post.classes[c][v];
      }
    }
    const double inv = 1.0 / static_cast<double>(num_scans);
    double change = 0.0;
    for (std::size_t c = 0; c < kNumTissueClasses; ++c) {
      for (std::size_t v = 0; v < n_vox; ++v) {
        accum.classes[c][v] *= inv;
        if (prior.brain_mask[v]) change += std::fabs(accum.classes[c][v] - prior.classes[c][v]);
      }
    }
    const std::size_t n_brain = study.scan(scans[0]).mask_count();
    rec.mean_posterior_change =
        change / (static_cast<double>(kNumTissueClasses) * static_cast<double>(n_brain));
    rec.max_sum_deviation = accum.max_sum_deviation();
    prior = std::move(accum);
    if (cfg.record_iterations) result.report.iteration_posteriors.push_back(prior);
    result.report.iterations.push_back(rec);
  }

  // final masks: smoothed posteriors, argmax + threshold
  std::array<ScalarVolume, kNumTissueClasses> smoothed;
  for (const TissueClass cls : kAllClasses) {
    smoothed[static_cast<std::size_t>(cls)] =
        gaussian_smooth(prior.to_volume(cls), cfg.posterior_smoothing_sigma_mm);
  }
  result.wm_mask = class_mask_from_smoothed(smoothed, TissueClass::WM, cfg.posterior_threshold,
                                            prior.brain_mask);
  result.gm_mask = class_mask_from_smoothed(smoothed, TissueClass::GM, cfg.posterior_threshold,
                                            prior.brain_mask);
  result.csf_mask = class_mask_from_smoothed(smoothed, TissueClass::CSF, cfg.posterior_threshold,
                                             prior.brain_mask);
  result.posterior = std::move(prior);

  // empty masks can legitimately happen (e.g. iterations = 0 thresholds the
  // smoothed prior); reference stats are skipped and consumers that need
  // them fail with a named error
  if (result.wm_mask.count_nonzero() == 0) {
    result.report.warnings.push_back("WM mask empty after posterior thresholding");
  } else if (result.gm_mask.count_nonzero() == 0) {
    result.report.warnings.push_back("GM mask empty after posterior thresholding");
  } else {
    for (const auto& [m, vol] : study.modalities) {
      result.wm_stats[m] = masked_stats(vol, result.wm_mask);
      result.gm_stats[m] = masked_stats(vol, result.gm_mask);
    }
  }
  return result;
}

} // namespace pbts
