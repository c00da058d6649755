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

#ifndef PBTS_SUBREGION_HPP
#define PBTS_SUBREGION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pbts/study.hpp"
#include "pbts/tissue.hpp"
#include "pbts/tumor.hpp"
#include "pbts/volume.hpp"

namespace pbts {

/// Exported label code table (codes 1..8 in this order).
enum class SubregionLabel : std::int32_t {
  Enhancing = 1,
  NonEnhancing = 2,
  Edema = 3,
  EarlyNecrosis = 4,
  LateNecrosis = 5,
  Hemorrhage = 6,
  Cyst = 7,
  TrappedCsf = 8,
};
inline constexpr std::int32_t kNumSubregionLabels = 8;

/// merge_necrosis maps both necrosis classes onto this code.
inline constexpr std::int32_t kMergedNecrosisCode =
    static_cast<std::int32_t>(SubregionLabel::EarlyNecrosis);

std::string to_string(SubregionLabel l);
SubregionLabel subregion_from_string(const std::string& name);

struct SubregionConfig {
  double enhance_k_sigma = 3.0;
  double t2_dark_k_sigma = 2.0;
  double t1_bright_k_sigma = 2.0;
  double t2_bright_k_sigma = 2.0;
  std::optional<double> flair_csf_threshold; // default: the tissue stage's th
  double flair_cyst_k_sigma = 2.0;
  double peritumoral_band_mm = 10.0;
  TissueClass reference = TissueClass::WM; // reference tissue for the rules
};

struct SubregionResult {
  LabelVolume labels;     // SubregionLabel codes, nonzero exactly on wt
  LabelVolume rule_trace; // decision-rule id (1..8) per labeled voxel
  std::vector<std::string> warnings;
};

/// Voxelwise T1-post minus T1 difference image.
ScalarVolume compute_t1_sub(const ScalarVolume& t1_post, const ScalarVolume& t1);

/// Ordered first-match decision rules over every whole-tumor voxel:
///   1 enhancing (core, T1-sub bright)   2 hemorrhage (T2 dark)
///   3 trapped CSF (FLAIR below th)      4 cyst (FLAIR dark vs reference)
///   5 early necrosis (T1 bright, non-core)
///   6 T2 bright -> edema if peritumoral else late necrosis
///   7 remaining core -> non-enhancing
///   8 remaining voxels -> nearest rule by z-score margin
SubregionResult classify_subregions(const Study& study, const WholeTumorResult& wt,
                                    const TissueResult& tissue, const SubregionConfig& cfg);

/// Relabels both necrosis classes to the single merged necrosis code.
LabelVolume merge_necrosis(const SubregionResult& labels);
LabelVolume merge_necrosis(const LabelVolume& labels);

} // namespace pbts

#endif
