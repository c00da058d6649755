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

#ifndef PBTS_EVAL_HPP
#define PBTS_EVAL_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pbts/volume.hpp"

namespace pbts {

struct DiceEntry {
  std::string structure;
  std::optional<double> dice; // empty = undefined (both masks empty)
  std::size_t pred_voxels = 0;
  std::size_t truth_voxels = 0;
  std::size_t intersection = 0;
};

struct DiceReport {
  std::string case_id;
  std::vector<DiceEntry> entries;

  /// Mean over defined entries; empty when none are defined.
  std::optional<double> mean_defined() const;
  const DiceEntry* find(const std::string& structure) const;
};

/// Dice overlap 2|A n B| / (|A| + |B|) of two binary masks on the same grid.
/// Undefined (nullopt) when both masks are empty; 0 when exactly one is.
std::optional<double> dice(const LabelVolume& a, const LabelVolume& b);

enum class EvalMode { WholeTumor, Subregion };

/// Whole-tumor mode: masks binarized (any nonzero label) and scored as one
/// structure. Subregion mode: necrosis classes merged on both sides, then one
/// dice per label code present in either volume; structures absent from both
/// are reported undefined.
DiceReport evaluate_case(const LabelVolume& pred, const LabelVolume& truth, EvalMode mode,
                         const std::string& case_id = "");

/// CSV: one row per case per structure (case_id, structure, dice, pred,
/// truth, intersection).
void write_dice_csv(const std::vector<DiceReport>& reports, std::ostream& out);

/// JSON aggregate: per-structure mean / median / min over defined scores,
/// plus the per-case entries.
void write_dice_json(const std::vector<DiceReport>& reports, std::ostream& out);

} // namespace pbts

#endif
