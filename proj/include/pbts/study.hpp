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

#ifndef PBTS_STUDY_HPP
#define PBTS_STUDY_HPP

#include <map>
#include <string>
#include <vector>

#include "pbts/volume.hpp"

namespace pbts {

enum class Modality { T1, T1Post, T2, Flair, Adc, T1Sub };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& name);

enum class TumorType { Atrt, Dipg, Lgg };

std::string to_string(TumorType t);
TumorType tumor_type_from_string(const std::string& name);

/// True for tumor types whose whole tumor extends beyond the core
/// (ATRT, DIPG); LGG is treated as homogeneous.
bool is_heterogeneous(TumorType t);

/// Per-case bundle of coregistered modalities on a common grid.
struct Study {
  std::string case_id;
  TumorType tumor_type = TumorType::Atrt;
  std::map<Modality, ScalarVolume> modalities;

  bool has(Modality m) const { return modalities.count(m) > 0; }
  const ScalarVolume& scan(Modality m) const;

  const Grid& grid() const;
  const std::vector<std::uint8_t>& brain_mask() const;

  /// Acquired input scans used by the tissue stage, in fixed order:
  /// T1, T1-post, T2, FLAIR, then ADC when present. Excludes the derived
  /// T1-sub difference image.
  std::vector<Modality> tissue_modalities() const;

  /// Checks modality requirements for the tumor type (ADC present iff ATRT),
  /// grid/mask agreement across volumes, per-volume invariants, and that
  /// T1-sub (when present) equals T1-post minus T1.
  void validate() const;
};

} // namespace pbts

#endif
