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

#include "pbts/subregion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbts/errors.hpp"

namespace pbts {

std::string to_string(SubregionLabel l) {
  switch (l) {
  case SubregionLabel::Enhancing: return "enhancing";
  case SubregionLabel::NonEnhancing: return "non_enhancing";
  case SubregionLabel::Edema: return "edema";
  case SubregionLabel::EarlyNecrosis: return "early_necrosis";
  case SubregionLabel::LateNecrosis: return "late_necrosis";
  case SubregionLabel::Hemorrhage: return "hemorrhage";
  case SubregionLabel::Cyst: return "cyst";
  case SubregionLabel::TrappedCsf: return "trapped_csf";
  }
  return "?";
}

SubregionLabel subregion_from_string(const std::string& name) {
  for (std::int32_t c = 1; c <= kNumSubregionLabels; ++c) {
    if (to_string(static_cast<SubregionLabel>(c)) == name) return static_cast<SubregionLabel>(c);
  }
  throw InputError("unknown subregion label: " + name);
}

ScalarVolume compute_t1_sub(const ScalarVolume& t1_post, const ScalarVolume& t1) {
  if (!t1_post.grid.matches(t1.grid)) throw InputError("compute_t1_sub: grid mismatch");
  ScalarVolume out = t1_post;
  for (std::size_t v = 0; v < out.data.size(); ++v) out.data[v] = t1_post.data[v] - t1.data[v];
  return out;
}

// ---------------------------------------------------------------------------
// Decision rules
// ---------------------------------------------------------------------------

SubregionResult classify_subregions(const Study& study, const WholeTumorResult& wt,
                                    const TissueResult& tissue, const SubregionConfig& cfg) {
  if (wt.wt_mask.count_nonzero() == 0) throw InputError("classify_subregions: empty whole tumor");
  const Grid& g = study.grid();

  const auto& ref_stats = tissue.stats_for(cfg.reference);
  const auto require_stats = [&](Modality m) -> const MaskedStats& {
    const auto it = ref_stats.find(m);
    if (it == ref_stats.end())
      throw StageError("subregion", "no reference statistics for " + to_string(m));
    if (!(it->second.std_dev > 0.0))
      throw StageError("subregion", "degenerate reference statistics for " + to_string(m));
    return it->second;
  };

  const ScalarVolume& t1 = study.scan(Modality::T1);
  const ScalarVolume& t2 = study.scan(Modality::T2);
  const ScalarVolume& flair = study.scan(Modality::Flair);
  const ScalarVolume t1sub_local =
      study.has(Modality::T1Sub) ? ScalarVolume{} : compute_t1_sub(study.scan(Modality::T1Post), t1);
  const ScalarVolume& t1sub = study.has(Modality::T1Sub) ? study.scan(Modality::T1Sub) : t1sub_local;

  const MaskedStats& s_t1 = require_stats(Modality::T1);
  const MaskedStats& s_t2 = require_stats(Modality::T2);
  const MaskedStats& s_flair = require_stats(Modality::Flair);
  MaskedStats s_t1sub;
  {
    const auto it = ref_stats.find(Modality::T1Sub);
    if (it != ref_stats.end()) {
      s_t1sub = it->second;
    } else {
      const LabelVolume& ref_mask =
          cfg.reference == TissueClass::GM ? tissue.gm_mask : tissue.wm_mask;
      s_t1sub = masked_stats(t1sub, ref_mask);
    }
    if (!(s_t1sub.std_dev > 0.0))
      throw StageError("subregion", "degenerate reference statistics for T1SUB");
  }

  SubregionResult result;
  result.labels = LabelVolume::zeros(g);
  result.rule_trace = LabelVolume::zeros(g);

  // rule cutoffs
  const double enhance_cut = s_t1sub.mean + cfg.enhance_k_sigma * s_t1sub.std_dev;
  const double t2_dark_cut = s_t2.mean - cfg.t2_dark_k_sigma * s_t2.std_dev;
  double csf_cut = cfg.flair_csf_threshold.value_or(tissue.csf_threshold.th);
  double cyst_cut = s_flair.mean - cfg.flair_cyst_k_sigma * s_flair.std_dev;
  const double t1_bright_cut = s_t1.mean + cfg.t1_bright_k_sigma * s_t1.std_dev;
  const double t2_bright_cut = s_t2.mean + cfg.t2_bright_k_sigma * s_t2.std_dev;

  // CSF must sit below the cyst cutoff; otherwise swap into ascending order
  if (!(csf_cut < cyst_cut)) {
    result.warnings.push_back("FLAIR CSF threshold (" + std::to_string(csf_cut) +
                              ") is not below the cyst cutoff (" + std::to_string(cyst_cut) +
                              "); thresholds swapped into ascending order");
    std::swap(csf_cut, cyst_cut);
  }

  // peritumoral band: dilation of the core by the band width, minus the core
  const LabelVolume band_region = morphology(wt.core_mask, MorphOp::Dilate,
                                             cfg.peritumoral_band_mm, &study.brain_mask());

  for (std::size_t v = 0; v < wt.wt_mask.labels.size(); ++v) {
    if (!wt.wt_mask.labels[v]) continue;
    const bool in_core = wt.core_mask.labels[v] != 0;
    const bool peritumoral = band_region.labels[v] != 0 && !in_core;

    SubregionLabel label;
    int rule = 0;
    if (in_core && t1sub.data[v] > enhance_cut) {
      label = SubregionLabel::Enhancing;
      rule = 1;
    } else if (t2.data[v] < t2_dark_cut) {
      label = SubregionLabel::Hemorrhage;
      rule = 2;
    } else if (flair.data[v] < csf_cut) {
      label = SubregionLabel::TrappedCsf;
      rule = 3;
    } else if (flair.data[v] < cyst_cut) {
      label = SubregionLabel::Cyst;
      rule = 4;
    } else if (!in_core && t1.data[v] > t1_bright_cut) {
      label = SubregionLabel::EarlyNecrosis;
      rule = 5;
    } else if (t2.data[v] > t2_bright_cut) {
      label = peritumoral ? SubregionLabel::Edema : SubregionLabel::LateNecrosis;
      rule = 6;
    } else if (in_core) {
      label = SubregionLabel::NonEnhancing;
      rule = 7;
    } else {
      // fallback: nearest rule (2-6) by z-score margin, ties to the earliest
      const double m_hem = (t2.data[v] - t2_dark_cut) / s_t2.std_dev;
      const double m_csf = (flair.data[v] - csf_cut) / s_flair.std_dev;
      const double m_cyst = (flair.data[v] - cyst_cut) / s_flair.std_dev;
      const double m_early = (t1_bright_cut - t1.data[v]) / s_t1.std_dev;
      const double m_t2b = (t2_bright_cut - t2.data[v]) / s_t2.std_dev;
      const double margins[5] = {m_hem, m_csf, m_cyst, m_early, m_t2b};
      const SubregionLabel options[5] = {
          SubregionLabel::Hemorrhage, SubregionLabel::TrappedCsf, SubregionLabel::Cyst,
          SubregionLabel::EarlyNecrosis,
          peritumoral ? SubregionLabel::Edema : SubregionLabel::LateNecrosis};
      int best = 0;
      for (int o = 1; o < 5; ++o) {
        if (margins[o] < margins[best]) best = o;
      }
      label = options[best];
      rule = 8;
    }
    result.labels.labels[v] = static_cast<std::int32_t>(label);
    result.rule_trace.labels[v] = rule;
  }
  return result;
}

LabelVolume merge_necrosis(const LabelVolume& labels) {
  LabelVolume out = labels;
  for (auto& l : out.labels) {
    if (l == static_cast<std::int32_t>(SubregionLabel::EarlyNecrosis) ||
        l == static_cast<std::int32_t>(SubregionLabel::LateNecrosis)) {
      l = kMergedNecrosisCode;
    }
  }
  return out;
}

LabelVolume merge_necrosis(const SubregionResult& labels) { return merge_necrosis(labels.labels); }

} // namespace pbts
