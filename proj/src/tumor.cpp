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

#include "pbts/tumor.hpp"

#include <algorithm>
#include <cmath>

#include "pbts/errors.hpp"

namespace pbts {

namespace {

// T1-post enhancement bar for the vessel heuristic (z-score vs WM stats)
constexpr double kVesselEnhanceKSigma = 2.0;
// brain-boundary shell width, in multiples of the smallest voxel spacing
constexpr double kBoundaryShellVoxels = 2.0;
// periventricular band width around the largest CSF component
constexpr double kPeriventricularBandMm = 2.0;

double min_spacing(const Grid& g) {
  return std::min(g.spacing[0], std::min(g.spacing[1], g.spacing[2]));
}

LabelVolume binarize(const LabelVolume& v) {
  LabelVolume out = v;
  for (auto& l : out.labels) l = l != 0 ? 1 : 0;
  return out;
}

LabelVolume component_mask(const LabelVolume& components, std::int32_t id) {
  LabelVolume out = LabelVolume::zeros(components.grid);
  for (std::size_t v = 0; v < components.labels.size(); ++v) {
    if (components.labels[v] == id) out.labels[v] = 1;
  }
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Core detection
// ---------------------------------------------------------------------------

LabelVolume detect_tumor_core(const Study& study, const TissueResult& tissue, TumorType ttype,
                              const TumorRuleConfig& cfg, TumorReport* report,
                              const LabelVolume* restrict_to) {
  const auto& ref_stats = tissue.stats_for(cfg.core_reference);

  Modality rule_modality;
  bool below; // direction of the abnormality
  if (ttype == TumorType::Atrt) {
    rule_modality = Modality::Adc; // hypercellular: ADC-dark
    below = true;
  } else {
    rule_modality = Modality::Flair; // DIPG / LGG: FLAIR-bright
    below = false;
  }
  if (!study.has(rule_modality))
    throw InputError("required modality " + to_string(rule_modality) + " missing for " +
                     to_string(ttype) + " core detection");
  const auto stat_it = ref_stats.find(rule_modality);
  if (stat_it == ref_stats.end())
    throw StageError("tumor", "no reference statistics for " + to_string(rule_modality));
  const MaskedStats& ref = stat_it->second;

  const ScalarVolume& vol = study.scan(rule_modality);
  LabelVolume candidates;
  if (below) {
    candidates = threshold_mask(vol, std::nullopt, ref.mean - cfg.core_k_sigma * ref.std_dev);
  } else {
    candidates = threshold_mask(vol, ref.mean + cfg.core_k_sigma * ref.std_dev, std::nullopt);
  }
  if (restrict_to) {
    if (restrict_to->labels.size() != candidates.labels.size())
      throw InputError("detect_tumor_core: restriction mask size mismatch");
    for (std::size_t v = 0; v < candidates.labels.size(); ++v) {
      if (!restrict_to->labels[v]) candidates.labels[v] = 0;
    }
  }

  // drop components below the minimum volume
  const LabelVolume comps = connected_components(candidates, Connectivity::TwentySix);
  const std::vector<std::size_t> sizes = component_sizes(comps);
  const double voxel_mm3 = comps.grid.voxel_volume_mm3();
  LabelVolume sized = LabelVolume::zeros(comps.grid);
  for (std::size_t v = 0; v < comps.labels.size(); ++v) {
    const std::int32_t id = comps.labels[v];
    if (id > 0 && static_cast<double>(sizes[static_cast<std::size_t>(id)]) * voxel_mm3 >=
                      cfg.min_component_mm3) {
      sized.labels[v] = 1;
    }
  }
  if (report) {
    for (std::int32_t id = 1; id <= comps.max_label(); ++id) {
      const double mm3 = static_cast<double>(sizes[static_cast<std::size_t>(id)]) * voxel_mm3;
      if (mm3 < cfg.min_component_mm3) {
        report->components.push_back({id, mm3, false, "below min_component_mm3"});
      }
    }
  }

  const LabelVolume core = suppress_false_positives(sized, study, tissue, cfg, report);
  if (core.count_nonzero() == 0) {
    throw StageError("tumor", restrict_to ? "no tumor core within supplied WT"
                                          : "no tumor core found");
  }
  return core;
}

// ---------------------------------------------------------------------------
// False-positive suppression
// ---------------------------------------------------------------------------

LabelVolume suppress_false_positives(const LabelVolume& candidates, const Study& study,
                                     const TissueResult& tissue, const TumorRuleConfig& cfg,
                                     TumorReport* report) {
  if (!candidates.is_binary()) throw InputError("suppress_false_positives: mask must be binary");
  const Grid& g = candidates.grid;
  const double voxel_mm3 = g.voxel_volume_mm3();
  const double one_voxel = min_spacing(g);
  const std::vector<std::uint8_t>& brain = study.brain_mask();

  const LabelVolume comps = connected_components(candidates, Connectivity::TwentySix);
  const std::int32_t n_comps = comps.max_label();
  if (n_comps == 0) return LabelVolume::zeros(g);
  const std::vector<std::size_t> sizes = component_sizes(comps);

  // (a) helper: candidate mask after one erosion step
  const LabelVolume eroded = morphology(candidates, MorphOp::Erode, one_voxel);
  std::vector<std::size_t> eroded_size(static_cast<std::size_t>(n_comps) + 1, 0);
  for (std::size_t v = 0; v < comps.labels.size(); ++v) {
    if (comps.labels[v] > 0 && eroded.labels[v])
      eroded_size[static_cast<std::size_t>(comps.labels[v])]++;
  }

  // (b) brain boundary shell: brain minus its erosion by 2 voxels
  LabelVolume brain_lv = LabelVolume::zeros(g);
  for (std::size_t v = 0; v < brain.size(); ++v) brain_lv.labels[v] = brain[v] ? 1 : 0;
  const LabelVolume brain_eroded =
      morphology(brain_lv, MorphOp::Erode, kBoundaryShellVoxels * one_voxel);
  std::vector<std::size_t> shell_overlap(static_cast<std::size_t>(n_comps) + 1, 0);
  for (std::size_t v = 0; v < comps.labels.size(); ++v) {
    if (comps.labels[v] > 0 && brain_lv.labels[v] && !brain_eroded.labels[v])
      shell_overlap[static_cast<std::size_t>(comps.labels[v])]++;
  }

  // (c) periventricular band: dilation of the largest CSF component
  std::vector<std::size_t> periband_overlap(static_cast<std::size_t>(n_comps) + 1, 0);
  const LabelVolume csf_comps = connected_components(tissue.csf_mask, Connectivity::TwentySix);
  if (csf_comps.max_label() > 0) {
    const LabelVolume band = morphology(component_mask(csf_comps, 1), MorphOp::Dilate,
                                        kPeriventricularBandMm, &brain);
    for (std::size_t v = 0; v < comps.labels.size(); ++v) {
      if (comps.labels[v] > 0 && band.labels[v])
        periband_overlap[static_cast<std::size_t>(comps.labels[v])]++;
    }
  }

  // per-component T1-post enhancement (z vs WM reference)
  const ScalarVolume& t1post = study.scan(Modality::T1Post);
  const MaskedStats& wm_t1post = tissue.wm_stats.at(Modality::T1Post);
  std::vector<double> t1post_sum(static_cast<std::size_t>(n_comps) + 1, 0.0);
  for (std::size_t v = 0; v < comps.labels.size(); ++v) {
    if (comps.labels[v] > 0) t1post_sum[static_cast<std::size_t>(comps.labels[v])] += t1post.data[v];
  }

  std::vector<bool> keep(static_cast<std::size_t>(n_comps) + 1, true);
  for (std::int32_t id = 1; id <= n_comps; ++id) {
    const std::size_t i = static_cast<std::size_t>(id);
    const double mm3 = static_cast<double>(sizes[i]) * voxel_mm3;
    const double eroded_mm3 = static_cast<double>(eroded_size[i]) * voxel_mm3;
    const double mean_t1post = t1post_sum[i] / static_cast<double>(sizes[i]);
    const double enhance_z =
        wm_t1post.std_dev > 0.0 ? (mean_t1post - wm_t1post.mean) / wm_t1post.std_dev : 0.0;
    std::string reason = "kept";

    if (eroded_mm3 < cfg.min_component_mm3 && enhance_z > kVesselEnhanceKSigma) {
      keep[i] = false;
      reason = "vessel: thin and T1-post enhancing";
    } else if (static_cast<double>(shell_overlap[i]) > 0.5 * static_cast<double>(sizes[i])) {
      keep[i] = false;
      reason = "brain boundary: majority inside the mask edge shell";
    } else if (periband_overlap[i] > 0 && eroded_size[i] == 0) {
      keep[i] = false;
      reason = "periventricular: CSF-adjacent with no interior after erosion";
    }
    if (report) report->components.push_back({id, mm3, keep[i], reason});
  }

  LabelVolume out = LabelVolume::zeros(g);
  for (std::size_t v = 0; v < comps.labels.size(); ++v) {
    if (comps.labels[v] > 0 && keep[static_cast<std::size_t>(comps.labels[v])]) out.labels[v] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-tumor expansion
// ---------------------------------------------------------------------------

namespace {

// Voxel is abnormal on some scan when its intensity sits beyond k sigma of
// both the WM and the GM reference for that scan.
LabelVolume abnormality_field(const Study& study, const TissueResult& tissue, double k_sigma) {
  const Grid& g = study.grid();
  const std::vector<std::uint8_t>& brain = study.brain_mask();
  LabelVolume out = LabelVolume::zeros(g);
  for (const Modality m : study.tissue_modalities()) {
    const ScalarVolume& vol = study.scan(m);
    const MaskedStats& wm = tissue.wm_stats.at(m);
    const MaskedStats& gm = tissue.gm_stats.at(m);
    if (!(wm.std_dev > 0.0) || !(gm.std_dev > 0.0)) continue;
    const double wm_lo = wm.mean - k_sigma * wm.std_dev;
    const double wm_hi = wm.mean + k_sigma * wm.std_dev;
    const double gm_lo = gm.mean - k_sigma * gm.std_dev;
    const double gm_hi = gm.mean + k_sigma * gm.std_dev;
    for (std::size_t v = 0; v < vol.data.size(); ++v) {
      if (!brain[v] || out.labels[v]) continue;
      const double x = vol.data[v];
      const bool beyond_wm = x < wm_lo || x > wm_hi;
      const bool beyond_gm = x < gm_lo || x > gm_hi;
      if (beyond_wm && beyond_gm) out.labels[v] = 1;
    }
  }
  return out;
}

} // namespace

WholeTumorResult expand_whole_tumor(const LabelVolume& core, const Study& study,
                                    const TissueResult& tissue, TumorType ttype,
                                    const TumorRuleConfig& cfg) {
  if (core.count_nonzero() == 0) throw InputError("expand_whole_tumor: empty core");
  const Grid& g = core.grid;

  WholeTumorResult result;
  result.core_mask = binarize(core);
  result.report.core_voxels = result.core_mask.count_nonzero();

  if (!is_heterogeneous(ttype)) {
    // one-step method: the whole tumor is the core
    result.wt_mask = result.core_mask;
    result.provenance = result.core_mask;
    return result;
  }

  // abnormality field, opened by one voxel to kill single-voxel noise dust
  // (a raw 2-sigma field over 4-5 scans covers ~20% of healthy brain and
  // would percolate into one giant component)
  LabelVolume abnormal = abnormality_field(study, tissue, cfg.expansion_k_sigma);
  abnormal = morphology(abnormal, MorphOp::Open, min_spacing(g), &study.brain_mask());

  const LabelVolume comps = connected_components(abnormal, Connectivity::TwentySix);
  const std::vector<std::size_t> sizes = component_sizes(comps);
  const double voxel_mm3 = g.voxel_volume_mm3();

  // iterative absorption: dilate the growing WT by the gap allowance and
  // absorb every sufficiently large abnormality component it touches
  std::vector<std::uint8_t> absorbed(sizes.size(), 0);
  LabelVolume grown = result.core_mask;
  bool changed = true;
  while (changed) {
    changed = false;
    const LabelVolume reach = morphology(grown, MorphOp::Dilate, cfg.expansion_max_gap_mm);
    std::vector<std::uint8_t> touches(sizes.size(), 0);
    for (std::size_t v = 0; v < comps.labels.size(); ++v) {
      const std::int32_t id = comps.labels[v];
      if (id > 0 && reach.labels[v]) touches[static_cast<std::size_t>(id)] = 1;
    }
    for (std::size_t id = 1; id < sizes.size(); ++id) {
      if (absorbed[id] || !touches[id]) continue;
      if (static_cast<double>(sizes[id]) * voxel_mm3 < cfg.min_component_mm3) continue;
      absorbed[id] = 1;
      changed = true;
    }
    if (changed) {
      for (std::size_t v = 0; v < comps.labels.size(); ++v) {
        const std::int32_t id = comps.labels[v];
        if (id > 0 && absorbed[static_cast<std::size_t>(id)]) grown.labels[v] = 1;
      }
    }
  }

  result.wt_mask = grown;
  result.provenance = LabelVolume::zeros(g);
  for (std::size_t v = 0; v < grown.labels.size(); ++v) {
    if (result.core_mask.labels[v]) {
      result.provenance.labels[v] = kProvenanceCore;
    } else if (grown.labels[v]) {
      result.provenance.labels[v] = kProvenanceExpansion;
      ++result.report.expansion_voxels;
    }
  }
  return result;
}

} // namespace pbts
