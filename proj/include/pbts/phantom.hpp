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

#ifndef PBTS_PHANTOM_HPP
#define PBTS_PHANTOM_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbts/study.hpp"
#include "pbts/subregion.hpp"
#include "pbts/tumor.hpp"
#include "pbts/volume.hpp"

namespace pbts {

struct IntensityStat {
  double mean = 0.0;
  double std_dev = 0.0;
};

struct TissueIntensities {
  IntensityStat wm, gm, csf;
};

enum class LesionShape { Sphere, Ellipsoid };

/// One planted lesion. Lesions are painted in list order; later lesions
/// overwrite earlier ones, which is how shells are built (paint the outer
/// sphere first, the core over it). `subregion` empty = generic tumor core.
struct LesionSpec {
  LesionShape shape = LesionShape::Sphere;
  std::array<double, 3> center_mm{0, 0, 0}; // offset from the volume center
  std::array<double, 3> radii_mm{10, 10, 10};
  std::optional<SubregionLabel> subregion;
  std::map<Modality, IntensityStat> intensity;

  bool is_core() const {
    return !subregion || *subregion == SubregionLabel::Enhancing ||
           *subregion == SubregionLabel::NonEnhancing;
  }
};

/// Concentric-geometry brain (CSF shell, GM ribbon, WM interior) with
/// planted lesions, Gaussian noise, and blurred-truth atlas priors.
struct PhantomSpec {
  std::string case_id = "phantom";
  TumorType tumor_type = TumorType::Atrt;
  Grid grid{{96, 96, 96}, {1.5, 1.5, 1.5}};
  double brain_radius_mm = 60.0;
  double csf_thickness_mm = 2.0;
  double gm_thickness_mm = 13.0;
  double atlas_blur_sigma_mm = 3.0;
  std::uint64_t noise_seed = 0;
  std::map<Modality, TissueIntensities> tissue;
  std::vector<LesionSpec> lesions;

  std::vector<Modality> modalities() const;
};

/// Truth tissue codes used by PhantomCase::truth_tissue.
inline constexpr std::int32_t kTruthWm = 1;
inline constexpr std::int32_t kTruthGm = 2;
inline constexpr std::int32_t kTruthCsf = 3;

struct PhantomCase {
  Study study;
  LabelVolume truth_tissue;     // 1 WM / 2 GM / 3 CSF, 0 at lesions and background
  LabelVolume truth_wt;         // union of all lesions
  LabelVolume truth_subregions; // SubregionLabel codes (core resolved to enh/non-enh)
  ScalarVolume atlas_wm, atlas_gm;
};

/// Checks that every lesion's intensities fire its own decision rule and
/// fail all earlier ones by at least one reference sigma beyond the
/// configured cutoffs, that core/non-core lesions respect the tumor-type
/// core rule, that non-core lesions are reachable by the expansion
/// abnormality field, that edema/late-necrosis geometry respects the
/// peritumoral band, and that every lesion exceeds the minimum component
/// volume. Throws InputError with the offending lesion and rule.
void validate_phantom_spec(const PhantomSpec& spec, const TumorRuleConfig& tumor_cfg,
                           const SubregionConfig& sub_cfg);

/// Deterministic for a fixed spec + seed.
PhantomCase generate_phantom(const PhantomSpec& spec);

/// PhantomSpec <-> JSON document.
PhantomSpec phantom_spec_from_json_text(const std::string& text);
std::string phantom_spec_to_json_text(const PhantomSpec& spec);

// Built-in presets (see README for the geometry and intensity tables).
PhantomSpec standard_atrt_spec(); // "standard phantom": full ATRT subregion set
PhantomSpec dipg_spec();
PhantomSpec lgg_spec();
PhantomSpec healthy_spec(TumorType type); // no lesions
PhantomSpec two_tissue_spec();            // equal WM/GM contrast on every scan
PhantomSpec preset_spec(const std::string& name);
std::vector<std::string> preset_names();

} // namespace pbts

#endif
