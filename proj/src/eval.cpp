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

#include "pbts/eval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "pbts/errors.hpp"
#include "pbts/subregion.hpp"

namespace pbts {

std::optional<double> DiceReport::mean_defined() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const DiceEntry& e : entries) {
    if (e.dice) {
      sum += *e.dice;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

const DiceEntry* DiceReport::find(const std::string& structure) const {
  for (const DiceEntry& e : entries) {
    if (e.structure == structure) return &e;
  }
  return nullptr;
}

std::optional<double> dice(const LabelVolume& a, const LabelVolume& b) {
  if (!a.grid.matches(b.grid)) throw InputError("dice: grid mismatch");
  if (!a.is_binary() || !b.is_binary()) throw InputError("dice: masks must be binary");
  std::size_t na = 0, nb = 0, ni = 0;
  for (std::size_t v = 0; v < a.labels.size(); ++v) {
    const bool in_a = a.labels[v] != 0;
    const bool in_b = b.labels[v] != 0;
    na += in_a;
    nb += in_b;
    ni += in_a && in_b;
  }
  if (na + nb == 0) return std::nullopt;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

namespace {

DiceEntry score_code(const LabelVolume& pred, const LabelVolume& truth, std::int32_t code,
                     const std::string& name) {
  DiceEntry e;
  e.structure = name;
  for (std::size_t v = 0; v < pred.labels.size(); ++v) {
    const bool in_p = pred.labels[v] == code;
    const bool in_t = truth.labels[v] == code;
    e.pred_voxels += in_p;
    e.truth_voxels += in_t;
    e.intersection += in_p && in_t;
  }
  if (e.pred_voxels + e.truth_voxels > 0) {
    e.dice = 2.0 * static_cast<double>(e.intersection) /
             static_cast<double>(e.pred_voxels + e.truth_voxels);
  }
  return e;
}

std::string merged_code_name(std::int32_t code) {
  if (code == kMergedNecrosisCode) return "necrosis";
  return to_string(static_cast<SubregionLabel>(code));
}

} // namespace

DiceReport evaluate_case(const LabelVolume& pred, const LabelVolume& truth, EvalMode mode,
                         const std::string& case_id) {
  if (!pred.grid.matches(truth.grid)) throw InputError("evaluate_case: grid mismatch");
  DiceReport report;
  report.case_id = case_id;

  if (mode == EvalMode::WholeTumor) {
    DiceEntry e;
    e.structure = "whole_tumor";
    for (std::size_t v = 0; v < pred.labels.size(); ++v) {
      const bool in_p = pred.labels[v] != 0;
      const bool in_t = truth.labels[v] != 0;
      e.pred_voxels += in_p;
      e.truth_voxels += in_t;
      e.intersection += in_p && in_t;
    }
    if (e.pred_voxels + e.truth_voxels > 0) {
      e.dice = 2.0 * static_cast<double>(e.intersection) /
               static_cast<double>(e.pred_voxels + e.truth_voxels);
    }
    report.entries.push_back(e);
    return report;
  }

  // subregion mode: merge necrosis on both sides, then score every code of
  // the merged table; codes absent from both stay undefined
  const LabelVolume p = merge_necrosis(pred);
  const LabelVolume t = merge_necrosis(truth);
  for (const LabelVolume* lv : {&p, &t}) {
    for (std::int32_t code : lv->labels) {
      if (code != 0 && (code < 1 || code > kNumSubregionLabels ||
                        code == static_cast<std::int32_t>(SubregionLabel::LateNecrosis))) {
        throw InputError("evaluate_case: unknown subregion label code " + std::to_string(code));
      }
    }
  }
  for (std::int32_t code = 1; code <= kNumSubregionLabels; ++code) {
    if (code == static_cast<std::int32_t>(SubregionLabel::LateNecrosis)) continue; // merged away
    report.entries.push_back(score_code(p, t, code, merged_code_name(code)));
  }
  return report;
}

void write_dice_csv(const std::vector<DiceReport>& reports, std::ostream& out) {
  out << "case_id,structure,dice,pred_voxels,truth_voxels,intersection\n";
  for (const DiceReport& r : reports) {
    for (const DiceEntry& e : r.entries) {
      out << r.case_id << ',' << e.structure << ',';
      if (e.dice) {
        out << *e.dice;
      } else {
        out << "undefined";
      }
      out << ',' << e.pred_voxels << ',' << e.truth_voxels << ',' << e.intersection << '\n';
    }
  }
}

void write_dice_json(const std::vector<DiceReport>& reports, std::ostream& out) {
  using nlohmann::json;
  json cases = json::array();
  std::map<std::string, std::vector<double>> by_structure;
  for (const DiceReport& r : reports) {
    json jc;
    jc["case_id"] = r.case_id;
    json entries = json::array();
    for (const DiceEntry& e : r.entries) {
      json je;
      je["structure"] = e.structure;
      if (e.dice) {
        je["dice"] = *e.dice;
        by_structure[e.structure].push_back(*e.dice);
      } else {
        je["dice"] = nullptr;
      }
      je["pred_voxels"] = e.pred_voxels;
      je["truth_voxels"] = e.truth_voxels;
      je["intersection"] = e.intersection;
      entries.push_back(je);
    }
    jc["entries"] = entries;
    cases.push_back(jc);
  }
  json agg = json::object();
  for (auto& [name, scores] : by_structure) {
    std::sort(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    const std::size_t n = scores.size();
    const double median =
        n % 2 == 1 ? scores[n / 2] : 0.5 * (scores[n / 2 - 1] + scores[n / 2]);
    agg[name] = {{"mean", sum / static_cast<double>(n)},
                 {"median", median},
                 {"min", scores.front()},
                 {"count", n}};
  }
  json root;
  root["aggregate"] = agg;
  root["cases"] = cases;
  out << root.dump(2) << '\n';
}

} // namespace pbts
