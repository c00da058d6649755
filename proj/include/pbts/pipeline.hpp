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

#ifndef PBTS_PIPELINE_HPP
#define PBTS_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>

#include "pbts/eval.hpp"
#include "pbts/study.hpp"
#include "pbts/subregion.hpp"
#include "pbts/tissue.hpp"
#include "pbts/tumor.hpp"

namespace pbts {

struct RunConfig {
  TissuePipelineConfig tissue;
  TumorRuleConfig tumor;
  SubregionConfig subregion;
  bool debug = false;
  std::uint64_t seed = 0;
};

/// RunConfig <-> JSON. Missing keys keep their defaults, unknown keys are
/// rejected (typo safety).
RunConfig run_config_from_json_text(const std::string& text);
std::string run_config_to_json_text(const RunConfig& cfg);

struct PipelineOutput {
  TissueResult tissue;
  WholeTumorResult wt;
  std::optional<SubregionResult> subregions; // absent for LGG
};

/// Runs tissue -> whole-tumor -> subregion (skipped for LGG) on a validated
/// Study. Stage failures surface as StageError with the stage name.
PipelineOutput run_full(const Study& study, const ScalarVolume& atlas_wm,
                        const ScalarVolume& atlas_gm, const RunConfig& cfg);

/// Subregion labeling over a supplied whole-tumor mask: the tissue stage is
/// recomputed, the core re-detected inside the given mask, and the decision
/// rules applied over exactly that mask.
SubregionResult run_subregions_given_wt(const Study& study, const LabelVolume& wt_mask,
                                        const ScalarVolume& atlas_wm, const ScalarVolume& atlas_gm,
                                        const RunConfig& cfg);

/// Builds a Study from per-modality NIfTI files. The brain mask is the
/// supplied mask file or, when absent, the intersection of nonzero voxels
/// across modalities. Grids and sform affines must agree within 1e-3.
Study load_study(const std::map<Modality, std::string>& paths, TumorType type,
                 const std::string& case_id, const std::string& mask_path = "");

/// Writes all outputs atomically (staged in a temporary directory that is
/// renamed to out_dir): tissue_{wm,gm,csf}.nii.gz, wt.nii.gz,
/// subregions.nii.gz (when present), codes.json, report.json, plus debug
/// volumes when cfg.debug is set. Reports carry no timestamps.
void write_outputs(const PipelineOutput& result, const Study& study, const RunConfig& cfg,
                   const std::string& out_dir,
                   const std::optional<DiceReport>& wt_dice = std::nullopt,
                   const std::optional<DiceReport>& subregion_dice = std::nullopt);

/// report.json content for a finished run (exposed for tests).
std::string make_report_text(const PipelineOutput& result, const Study& study,
                             const RunConfig& cfg,
                             const std::optional<DiceReport>& wt_dice = std::nullopt,
                             const std::optional<DiceReport>& subregion_dice = std::nullopt);

/// The label code tables written next to every label volume.
std::string codes_json_text();

} // namespace pbts

#endif
