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

#ifndef PBTS_TUMOR_HPP
#define PBTS_TUMOR_HPP

#include <string>
#include <vector>

#include "pbts/study.hpp"
#include "pbts/tissue.hpp"
#include "pbts/volume.hpp"

namespace pbts {

struct TumorRuleConfig {
  double core_k_sigma = 2.0;
  double expansion_k_sigma = 2.0;
  double min_component_mm3 = 200.0;
  double expansion_max_gap_mm = 2.0;
  TissueClass core_reference = TissueClass::GM; // reference tissue for core rules
};

/// Per-component bookkeeping for the debug report.
struct ComponentDecision {
  int component = 0;
  double volume_mm3 = 0.0;
  bool kept = true;
  std::string reason; // rule that admitted or removed it
};

struct TumorReport {
  std::vector<ComponentDecision> components;
  std::size_t core_voxels = 0;
  std::size_t expansion_voxels = 0;
};

/// Provenance codes for WholeTumorResult::provenance.
inline constexpr std::int32_t kProvenanceCore = 1;
inline constexpr std::int32_t kProvenanceExpansion = 2;

struct WholeTumorResult {
  LabelVolume core_mask;
  LabelVolume wt_mask;
  LabelVolume provenance; // 0 outside, 1 core, 2 expansion
  TumorReport report;
};

/// Tumor-core detection from type-specific intensity knowledge:
/// ADC below the reference for ATRT, FLAIR above it for DIPG / LGG,
/// followed by minimum-size filtering and false-positive suppression.
/// restrict_to, when given, limits candidate voxels to that mask.
LabelVolume detect_tumor_core(const Study& study, const TissueResult& tissue, TumorType ttype,
                              const TumorRuleConfig& cfg, TumorReport* report = nullptr,
                              const LabelVolume* restrict_to = nullptr);

/// Removes candidate components that look like known false positives:
/// (a) thin, strongly T1-post-enhancing structures (vessels),
/// (b) components hugging the brain-mask boundary (imperfect extraction),
/// (c) thin periventricular hyperintensities next to the main CSF body.
LabelVolume suppress_false_positives(const LabelVolume& candidates, const Study& study,
                                     const TissueResult& tissue, const TumorRuleConfig& cfg,
                                     TumorReport* report = nullptr);

/// Whole-tumor assembly. LGG: wt = core. ATRT / DIPG: abnormality field
/// (per-scan intensities beyond expansion_k_sigma of both WM and GM
/// references), cleaned and absorbed into the WT when connected to the core
/// within expansion_max_gap_mm.
WholeTumorResult expand_whole_tumor(const LabelVolume& core, const Study& study,
                                    const TissueResult& tissue, TumorType ttype,
                                    const TumorRuleConfig& cfg);

} // namespace pbts

#endif
