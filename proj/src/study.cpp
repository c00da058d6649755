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

#include "pbts/study.hpp"

#include <algorithm>

#include "pbts/errors.hpp"

namespace pbts {

std::string to_string(Modality m) {
  switch (m) {
  case Modality::T1: return "T1";
  case Modality::T1Post: return "T1POST";
  case Modality::T2: return "T2";
  case Modality::Flair: return "FLAIR";
  case Modality::Adc: return "ADC";
  case Modality::T1Sub: return "T1SUB";
  }
  return "?";
}

Modality modality_from_string(const std::string& name) {
  std::string u = name;
  std::transform(u.begin(), u.end(), u.begin(), ::toupper);
  if (u == "T1") return Modality::T1;
  if (u == "T1POST" || u == "T1-POST" || u == "T1C") return Modality::T1Post;
  if (u == "T2") return Modality::T2;
  if (u == "FLAIR") return Modality::Flair;
  if (u == "ADC") return Modality::Adc;
  if (u == "T1SUB" || u == "T1-SUB") return Modality::T1Sub;
  throw InputError("unknown modality: " + name);
}

std::string to_string(TumorType t) {
  switch (t) {
  case TumorType::Atrt: return "ATRT";
  case TumorType::Dipg: return "DIPG";
  case TumorType::Lgg: return "LGG";
  }
  return "?";
}

TumorType tumor_type_from_string(const std::string& name) {
  std::string u = name;
  std::transform(u.begin(), u.end(), u.begin(), ::toupper);
  if (u == "ATRT") return TumorType::Atrt;
  if (u == "DIPG") return TumorType::Dipg;
  if (u == "LGG") return TumorType::Lgg;
  throw InputError("unknown tumor type: " + name);
}

bool is_heterogeneous(TumorType t) { return t != TumorType::Lgg; }

const ScalarVolume& Study::scan(Modality m) const {
  const auto it = modalities.find(m);
  if (it == modalities.end())
    throw InputError("required modality " + to_string(m) + " missing");
  return it->second;
}

const Grid& Study::grid() const {
  if (modalities.empty()) throw InputError("study has no modalities");
  return modalities.begin()->second.grid;
}

const std::vector<std::uint8_t>& Study::brain_mask() const {
  if (modalities.empty()) throw InputError("study has no modalities");
  return modalities.begin()->second.brain_mask;
}

std::vector<Modality> Study::tissue_modalities() const {
  std::vector<Modality> out{Modality::T1, Modality::T1Post, Modality::T2, Modality::Flair};
  if (has(Modality::Adc)) out.push_back(Modality::Adc);
  return out;
}

void Study::validate() const {
  for (const Modality m : {Modality::T1, Modality::T1Post, Modality::T2, Modality::Flair}) {
    if (!has(m)) throw InputError("required modality " + to_string(m) + " missing");
  }
  if (tumor_type == TumorType::Atrt) {
    if (!has(Modality::Adc)) throw InputError("required modality ADC missing (ATRT)");
  } else if (has(Modality::Adc)) {
    throw InputError("ADC supplied but tumor type is " + to_string(tumor_type) +
                     "; ADC is an ATRT-only input");
  }

  const Grid& g = grid();
  const std::vector<std::uint8_t>& mask = brain_mask();
  for (const auto& [m, vol] : modalities) {
    vol.validate();
    if (!vol.grid.matches(g))
      throw InputError("modality " + to_string(m) + " is not on the study grid");
    if (vol.brain_mask != mask)
      throw InputError("modality " + to_string(m) + " has a different brain mask");
  }

  if (has(Modality::T1Sub)) {
    const ScalarVolume& sub = scan(Modality::T1Sub);
    const ScalarVolume& t1 = scan(Modality::T1);
    const ScalarVolume& t1p = scan(Modality::T1Post);
    for (std::size_t v = 0; v < sub.data.size(); ++v) {
      if (mask[v] && sub.data[v] != t1p.data[v] - t1.data[v])
        throw InputError("T1SUB does not equal T1POST - T1");
    }
  }
}

} // namespace pbts
