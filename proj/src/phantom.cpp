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

#include "pbts/phantom.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pbts/errors.hpp"
#include "pbts/rng.hpp"

namespace pbts {

using nlohmann::json;

std::vector<Modality> PhantomSpec::modalities() const {
  std::vector<Modality> out;
  for (const auto& [m, t] : tissue) out.push_back(m);
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

struct RuleContext {
  // WM/GM/CSF spec stats per modality plus derived cutoffs
  const PhantomSpec& spec;
  const TumorRuleConfig& tcfg;
  const SubregionConfig& scfg;

  const TissueIntensities& tissue(Modality m) const {
    const auto it = spec.tissue.find(m);
    if (it == spec.tissue.end())
      throw InputError("phantom: no tissue intensities for " + to_string(m));
    return it->second;
  }
  const IntensityStat& ref(Modality m) const {
    return scfg.reference == TissueClass::GM ? tissue(m).gm : tissue(m).wm;
  }
  IntensityStat ref_t1sub() const {
    const IntensityStat a = ref(Modality::T1Post);
    const IntensityStat b = ref(Modality::T1);
    return {a.mean - b.mean, std::sqrt(a.std_dev * a.std_dev + b.std_dev * b.std_dev)};
  }
  double lesion_mean(const LesionSpec& l, Modality m) const {
    const auto it = l.intensity.find(m);
    if (it == l.intensity.end())
      throw InputError("phantom: lesion missing intensity for " + to_string(m));
    return it->second.mean;
  }
  double lesion_t1sub_mean(const LesionSpec& l) const {
    return lesion_mean(l, Modality::T1Post) - lesion_mean(l, Modality::T1);
  }
};

SubregionLabel resolve_core_label(const RuleContext& ctx, const LesionSpec& l) {
  const IntensityStat sub = ctx.ref_t1sub();
  const double cut = sub.mean + ctx.scfg.enhance_k_sigma * sub.std_dev;
  const double x = ctx.lesion_t1sub_mean(l);
  if (l.subregion) {
    // declared explicitly; margin checks happen later
    return *l.subregion;
  }
  if (x >= cut + sub.std_dev) return SubregionLabel::Enhancing;
  if (x <= cut - sub.std_dev) return SubregionLabel::NonEnhancing;
  throw InputError("phantom: generic core lesion sits within 1 sigma of the enhancement "
                   "cutoff; declare it enhancing or non-enhancing explicitly");
}

void require(bool ok, std::size_t lesion_idx, const std::string& what) {
  if (!ok) {
    throw InputError("phantom: lesion " + std::to_string(lesion_idx) +
                     " violates its claimed rule: " + what);
  }
}

} // namespace

void validate_phantom_spec(const PhantomSpec& spec, const TumorRuleConfig& tumor_cfg,
                           const SubregionConfig& sub_cfg) {
  spec.grid.validate();
  if (spec.tissue.empty()) throw InputError("phantom: no tissue intensity table");
  for (const Modality m : {Modality::T1, Modality::T1Post, Modality::T2, Modality::Flair}) {
    if (!spec.tissue.count(m))
      throw InputError("phantom: tissue table missing modality " + to_string(m));
  }
  if (spec.tumor_type == TumorType::Atrt && !spec.tissue.count(Modality::Adc))
    throw InputError("phantom: ATRT phantom requires an ADC column");
  if (spec.tumor_type != TumorType::Atrt && spec.tissue.count(Modality::Adc))
    throw InputError("phantom: ADC column is ATRT-only");
  if (!(spec.brain_radius_mm > spec.csf_thickness_mm + spec.gm_thickness_mm))
    throw InputError("phantom: brain radius must exceed the CSF + GM shell thickness");

  const RuleContext ctx{spec, tumor_cfg, sub_cfg};
  const double voxel_budget = tumor_cfg.min_component_mm3;

  // core-rule cutoff (reference is the tumor config's, usually GM)
  const Modality core_mod = spec.tumor_type == TumorType::Atrt ? Modality::Adc : Modality::Flair;
  const IntensityStat core_ref = tumor_cfg.core_reference == TissueClass::GM
                                     ? ctx.tissue(core_mod).gm
                                     : ctx.tissue(core_mod).wm;
  const bool core_below = spec.tumor_type == TumorType::Atrt;
  const double k = tumor_cfg.core_k_sigma;

  const IntensityStat sub = ctx.ref_t1sub();
  const double enhance_cut = sub.mean + sub_cfg.enhance_k_sigma * sub.std_dev;
  const IntensityStat t2r = ctx.ref(Modality::T2);
  const double t2_dark_cut = t2r.mean - sub_cfg.t2_dark_k_sigma * t2r.std_dev;
  const double t2_bright_cut = t2r.mean + sub_cfg.t2_bright_k_sigma * t2r.std_dev;
  const IntensityStat flr = ctx.ref(Modality::Flair);
  const double cyst_cut = flr.mean - sub_cfg.flair_cyst_k_sigma * flr.std_dev;
  const IntensityStat t1r = ctx.ref(Modality::T1);
  const double t1_bright_cut = t1r.mean + sub_cfg.t1_bright_k_sigma * t1r.std_dev;
  const IntensityStat csf_flair = ctx.tissue(Modality::Flair).csf;
  // proxy for the data-derived FLAIR CSF threshold: midway between the CSF
  // mode and the darker of the WM / GM modes
  const double proxy_th =
      0.5 * (csf_flair.mean +
             std::min(ctx.tissue(Modality::Flair).wm.mean, ctx.tissue(Modality::Flair).gm.mean));

  for (std::size_t li = 0; li < spec.lesions.size(); ++li) {
    const LesionSpec& l = spec.lesions[li];
    for (const Modality m : spec.modalities()) ctx.lesion_mean(l, m); // presence check

    const double vol_mm3 =
        4.0 / 3.0 * 3.14159265358979323846 * l.radii_mm[0] * l.radii_mm[1] * l.radii_mm[2];
    require(vol_mm3 >= voxel_budget, li,
            "lesion volume below min_component_mm3; it would be filtered out");

    const SubregionLabel label = resolve_core_label(ctx, l);
    const bool core = l.is_core();
    if (!core) {
      require(label != SubregionLabel::Enhancing && label != SubregionLabel::NonEnhancing, li,
              "enhancing / non-enhancing labels are core-only");
    }

    // tumor-type core rule: core lesions fire it, non-core lesions miss it
    const double core_val = ctx.lesion_mean(l, core_mod);
    if (core) {
      if (core_below) {
        require(core_val <= core_ref.mean - (k + 1.0) * core_ref.std_dev, li,
                "core lesion is not dark enough on " + to_string(core_mod));
      } else {
        require(core_val >= core_ref.mean + (k + 1.0) * core_ref.std_dev, li,
                "core lesion is not bright enough on " + to_string(core_mod));
      }
    } else {
      if (core_below) {
        require(core_val >= core_ref.mean - (k - 1.0) * core_ref.std_dev, li,
                "non-core lesion would fire the core rule on " + to_string(core_mod));
      } else {
        require(core_val <= core_ref.mean + (k - 1.0) * core_ref.std_dev, li,
                "non-core lesion would fire the core rule on " + to_string(core_mod));
      }
    }

    // decision-rule chain: fire own rule, fail all earlier applicable rules,
    // all with a >= 1 reference-sigma margin
    const double t1m = ctx.lesion_mean(l, Modality::T1);
    const double t2m = ctx.lesion_mean(l, Modality::T2);
    const double flairm = ctx.lesion_mean(l, Modality::Flair);
    const double t1subm = ctx.lesion_t1sub_mean(l);

    const int rule = [&] {
      switch (label) {
      case SubregionLabel::Enhancing: return 1;
      case SubregionLabel::Hemorrhage: return 2;
      case SubregionLabel::TrappedCsf: return 3;
      case SubregionLabel::Cyst: return 4;
      case SubregionLabel::EarlyNecrosis: return 5;
      case SubregionLabel::Edema:
      case SubregionLabel::LateNecrosis: return 6;
      case SubregionLabel::NonEnhancing: return 7;
      }
      return 7;
    }();

    if (core) {
      if (rule == 1) {
        require(t1subm >= enhance_cut + sub.std_dev, li, "enhancing core is not T1-sub bright");
      } else {
        require(t1subm <= enhance_cut - sub.std_dev, li,
                "non-enhancing core would fire the enhancement rule");
      }
    }
    if (rule == 2) {
      require(t2m <= t2_dark_cut - t2r.std_dev, li, "hemorrhage is not T2 dark");
    } else if (rule > 2) {
      require(t2m >= t2_dark_cut + t2r.std_dev, li, "lesion would fire the hemorrhage rule");
    }
    if (rule == 3) {
      require(flairm <= csf_flair.mean + csf_flair.std_dev, li,
              "trapped CSF is not as dark as tissue CSF on FLAIR");
    } else if (rule > 3) {
      require(flairm >= proxy_th + flr.std_dev, li,
              "lesion FLAIR sits below the CSF threshold proxy");
    }
    if (rule == 4) {
      require(flairm <= cyst_cut - flr.std_dev, li, "cyst is not FLAIR dark vs the reference");
      require(flairm >= proxy_th + flr.std_dev, li, "cyst FLAIR below the CSF threshold proxy");
    } else if (rule > 4) {
      require(flairm >= cyst_cut + flr.std_dev, li, "lesion would fire the cyst rule");
    }
    if (rule == 5) {
      require(t1m >= t1_bright_cut + t1r.std_dev, li, "early necrosis is not T1 bright");
    } else if (rule == 6) {
      require(t1m <= t1_bright_cut - t1r.std_dev, li, "lesion would fire the early-necrosis rule");
    }
    if (rule == 6) {
      require(t2m >= t2_bright_cut + t2r.std_dev, li, "lesion is not T2 bright");
    } else if (rule == 7) {
      require(t2m <= t2_bright_cut - t2r.std_dev, li,
              "non-enhancing core would fire the T2-bright rule");
    }

    // peritumoral geometry for the two rule-6 labels (sphere bound)
    if (label == SubregionLabel::Edema || label == SubregionLabel::LateNecrosis) {
      const double r_l = *std::max_element(l.radii_mm.begin(), l.radii_mm.end());
      bool near_core = false, clear_of_band = true;
      for (const LesionSpec& other : spec.lesions) {
        if (!other.is_core()) continue;
        const double r_c = *std::min_element(other.radii_mm.begin(), other.radii_mm.end());
        const double r_c_max = *std::max_element(other.radii_mm.begin(), other.radii_mm.end());
        double dist = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double d = l.center_mm[static_cast<std::size_t>(a)] -
                           other.center_mm[static_cast<std::size_t>(a)];
          dist += d * d;
        }
        dist = std::sqrt(dist);
        if (dist + r_l <= r_c + sub_cfg.peritumoral_band_mm) near_core = true;
        if (dist - r_l < r_c_max + sub_cfg.peritumoral_band_mm) clear_of_band = false;
      }
      if (label == SubregionLabel::Edema) {
        require(near_core, li, "edema lesion is not entirely within the peritumoral band");
      } else {
        require(clear_of_band, li, "late necrosis lesion intersects the peritumoral band");
      }
    }

    // expansion reachability: non-core lesions must be abnormal on some scan
    if (!core && is_heterogeneous(spec.tumor_type)) {
      const double ek = tumor_cfg.expansion_k_sigma + 1.0;
      bool abnormal = false;
      for (const Modality m : spec.modalities()) {
        const TissueIntensities& t = ctx.tissue(m);
        const double x = ctx.lesion_mean(l, m);
        if (std::fabs(x - t.wm.mean) >= ek * t.wm.std_dev &&
            std::fabs(x - t.gm.mean) >= ek * t.gm.std_dev) {
          abnormal = true;
          break;
        }
      }
      require(abnormal, li, "lesion is not abnormal on any scan; expansion cannot reach it");
    }
  }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

// geometric tissue code at a physical radius from the brain center
std::int32_t shell_code(double r, const PhantomSpec& spec) {
  if (r > spec.brain_radius_mm) return 0;
  if (r > spec.brain_radius_mm - spec.csf_thickness_mm) return kTruthCsf;
  if (r > spec.brain_radius_mm - spec.csf_thickness_mm - spec.gm_thickness_mm) return kTruthGm;
  return kTruthWm;
}

bool inside_lesion(const LesionSpec& l, const std::array<double, 3>& rel) {
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = (rel[static_cast<std::size_t>(a)] - l.center_mm[static_cast<std::size_t>(a)]) /
                     l.radii_mm[static_cast<std::size_t>(a)];
    acc += d * d;
  }
  return acc <= 1.0;
}

} // namespace

PhantomCase generate_phantom(const PhantomSpec& spec) {
  spec.grid.validate();
  const Grid& g = spec.grid;
  const std::size_t n = g.voxel_count();
  const std::array<double, 3> center = {g.dims[0] * g.spacing[0] * 0.5,
                                        g.dims[1] * g.spacing[1] * 0.5,
                                        g.dims[2] * g.spacing[2] * 0.5};

  // resolve generic-core truth labels up front
  std::vector<SubregionLabel> lesion_truth(spec.lesions.size());
  {
    const TumorRuleConfig tcfg;
    const SubregionConfig scfg;
    const RuleContext ctx{spec, tcfg, scfg};
    for (std::size_t li = 0; li < spec.lesions.size(); ++li) {
      lesion_truth[li] = resolve_core_label(ctx, spec.lesions[li]);
    }
  }

  // geometry pass: tissue shell code and last-painted lesion per voxel
  std::vector<std::int32_t> shell(n, 0);
  std::vector<std::int32_t> lesion_at(n, -1);
  std::vector<std::uint8_t> mask(n, 0);
  for (int kk = 0; kk < g.dims[2]; ++kk) {
    for (int jj = 0; jj < g.dims[1]; ++jj) {
      for (int ii = 0; ii < g.dims[0]; ++ii) {
        const std::size_t v = g.linear(ii, jj, kk);
        const std::array<double, 3> pos = {(ii + 0.5) * g.spacing[0], (jj + 0.5) * g.spacing[1],
                                           (kk + 0.5) * g.spacing[2]};
        const std::array<double, 3> rel = {pos[0] - center[0], pos[1] - center[1],
                                           pos[2] - center[2]};
        const double r = std::sqrt(rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]);
        const std::int32_t code = shell_code(r, spec);
        shell[v] = code;
        if (code == 0) continue;
        mask[v] = 1;
        for (std::size_t li = 0; li < spec.lesions.size(); ++li) {
          if (inside_lesion(spec.lesions[li], rel)) lesion_at[v] = static_cast<std::int32_t>(li);
        }
      }
    }
  }

  PhantomCase out;
  out.truth_tissue = LabelVolume::zeros(g);
  out.truth_wt = LabelVolume::zeros(g);
  out.truth_subregions = LabelVolume::zeros(g);
  for (std::size_t v = 0; v < n; ++v) {
    if (!mask[v]) continue;
    if (lesion_at[v] >= 0) {
      out.truth_wt.labels[v] = 1;
      out.truth_subregions.labels[v] =
          static_cast<std::int32_t>(lesion_truth[static_cast<std::size_t>(lesion_at[v])]);
    } else {
      out.truth_tissue.labels[v] = shell[v];
    }
  }

  // intensity pass: one independent noise stream per modality
  out.study.case_id = spec.case_id;
  out.study.tumor_type = spec.tumor_type;
  std::uint64_t mod_index = 0;
  for (const auto& [m, tiss] : spec.tissue) {
    Rng rng(derive_seed(spec.noise_seed, mod_index++));
    ScalarVolume vol = ScalarVolume::filled(g, 0.0);
    vol.brain_mask = mask;
    for (std::size_t v = 0; v < n; ++v) {
      if (!mask[v]) {
        vol.data[v] = 0.0;
        continue;
      }
      IntensityStat stat;
      if (lesion_at[v] >= 0) {
        const LesionSpec& l = spec.lesions[static_cast<std::size_t>(lesion_at[v])];
        const auto it = l.intensity.find(m);
        if (it == l.intensity.end())
          throw InputError("phantom: lesion missing intensity for " + to_string(m));
        stat = it->second;
      } else {
        stat = (shell[v] == kTruthWm) ? tiss.wm : (shell[v] == kTruthGm) ? tiss.gm : tiss.csf;
      }
      vol.data[v] = stat.mean + stat.std_dev * rng.normal();
    }
    out.study.modalities.emplace(m, std::move(vol));
  }

  // imperfect atlas priors: pre-lesion tissue indicators, Gaussian-blurred
  for (const std::int32_t code : {kTruthWm, kTruthGm}) {
    ScalarVolume ind = ScalarVolume::filled(g, 0.0);
    ind.brain_mask = mask;
    for (std::size_t v = 0; v < n; ++v) ind.data[v] = (shell[v] == code) ? 1.0 : 0.0;
    ScalarVolume blurred = gaussian_smooth(ind, spec.atlas_blur_sigma_mm);
    for (std::size_t v = 0; v < n; ++v) {
      if (!mask[v]) blurred.data[v] = 0.0;
    }
    if (code == kTruthWm) {
      out.atlas_wm = std::move(blurred);
    } else {
      out.atlas_gm = std::move(blurred);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace {

json stat_to_json(const IntensityStat& s) { return json::array({s.mean, s.std_dev}); }

IntensityStat stat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("phantom json: intensity must be [mean, std]");
  return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace

std::string phantom_spec_to_json_text(const PhantomSpec& spec) {
  json j;
  j["case_id"] = spec.case_id;
  j["tumor_type"] = to_string(spec.tumor_type);
  j["dims"] = spec.grid.dims;
  j["spacing"] = spec.grid.spacing;
  j["brain_radius_mm"] = spec.brain_radius_mm;
  j["csf_thickness_mm"] = spec.csf_thickness_mm;
  j["gm_thickness_mm"] = spec.gm_thickness_mm;
  j["atlas_blur_sigma_mm"] = spec.atlas_blur_sigma_mm;
  j["noise_seed"] = spec.noise_seed;
  json tissue = json::object();
  for (const auto& [m, t] : spec.tissue) {
    tissue[to_string(m)] = {{"wm", stat_to_json(t.wm)},
                            {"gm", stat_to_json(t.gm)},
                            {"csf", stat_to_json(t.csf)}};
  }
  j["tissue"] = tissue;
  json lesions = json::array();
  for (const LesionSpec& l : spec.lesions) {
    json jl;
    jl["shape"] = l.shape == LesionShape::Sphere ? "sphere" : "ellipsoid";
    jl["center_mm"] = l.center_mm;
    jl["radii_mm"] = l.radii_mm;
    jl["subregion"] = l.subregion ? to_string(*l.subregion) : "core";
    json intensity = json::object();
    for (const auto& [m, s] : l.intensity) intensity[to_string(m)] = stat_to_json(s);
    jl["intensity"] = intensity;
    lesions.push_back(jl);
  }
  j["lesions"] = lesions;
  return j.dump(2) + "\n";
}

PhantomSpec phantom_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("phantom json: ") + e.what());
  }
  PhantomSpec spec;
  try {
    spec.case_id = j.value("case_id", std::string("phantom"));
    spec.tumor_type = tumor_type_from_string(j.at("tumor_type").get<std::string>());
    spec.grid.dims = j.at("dims").get<std::array<int, 3>>();
    spec.grid.spacing = j.at("spacing").get<std::array<double, 3>>();
    spec.brain_radius_mm = j.value("brain_radius_mm", 60.0);
    spec.csf_thickness_mm = j.value("csf_thickness_mm", 2.0);
    spec.gm_thickness_mm = j.value("gm_thickness_mm", 13.0);
    spec.atlas_blur_sigma_mm = j.value("atlas_blur_sigma_mm", 3.0);
    spec.noise_seed = j.value("noise_seed", 0ull);
    for (const auto& [name, t] : j.at("tissue").items()) {
      TissueIntensities ti;
      ti.wm = stat_from_json(t.at("wm"));
      ti.gm = stat_from_json(t.at("gm"));
      ti.csf = stat_from_json(t.at("csf"));
      spec.tissue[modality_from_string(name)] = ti;
    }
    for (const auto& jl : j.value("lesions", json::array())) {
      LesionSpec l;
      const std::string shape = jl.value("shape", std::string("sphere"));
      if (shape == "sphere") {
        l.shape = LesionShape::Sphere;
      } else if (shape == "ellipsoid") {
        l.shape = LesionShape::Ellipsoid;
      } else {
        throw InputError("phantom json: unknown lesion shape " + shape);
      }
      l.center_mm = jl.at("center_mm").get<std::array<double, 3>>();
      l.radii_mm = jl.at("radii_mm").get<std::array<double, 3>>();
      const std::string sub = jl.value("subregion", std::string("core"));
      if (sub != "core") l.subregion = subregion_from_string(sub);
      for (const auto& [name, s] : jl.at("intensity").items()) {
        l.intensity[modality_from_string(name)] = stat_from_json(s);
      }
      spec.lesions.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("phantom json: ") + e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

std::map<Modality, IntensityStat> lesion_table(double t1, double t1post, double t2, double flair,
                                               std::optional<double> adc, double sd = 8.0) {
  std::map<Modality, IntensityStat> out;
  out[Modality::T1] = {t1, sd};
  out[Modality::T1Post] = {t1post, sd};
  out[Modality::T2] = {t2, sd};
  out[Modality::Flair] = {flair, sd};
  if (adc) out[Modality::Adc] = {*adc, sd};
  return out;
}

void standard_tissue_table(PhantomSpec& spec, bool with_adc) {
  // WM / GM means separated by 10 sigma on every scan; CSF darkest on FLAIR.
  // WM sits above GM on ADC so healthy WM stays clear of the ATRT core rule
  // (ADC below the GM reference).
  spec.tissue[Modality::T1] = {{400, 10}, {300, 10}, {150, 10}};
  spec.tissue[Modality::T1Post] = {{400, 10}, {300, 10}, {150, 10}};
  spec.tissue[Modality::T2] = {{300, 10}, {400, 10}, {500, 10}};
  spec.tissue[Modality::Flair] = {{300, 10}, {400, 10}, {100, 10}};
  if (with_adc) spec.tissue[Modality::Adc] = {{1200, 10}, {1100, 10}, {1600, 10}};
}

} // namespace

PhantomSpec standard_atrt_spec() {
  PhantomSpec spec;
  spec.case_id = "standard-atrt";
  spec.tumor_type = TumorType::Atrt;
  spec.noise_seed = 20260301;
  standard_tissue_table(spec, true);

  // painted in order; the core overwrites the middle of the edema sphere,
  // the pockets hang off the edema ring (late necrosis chains through the
  // hemorrhage pocket to stay outside the 10 mm peritumoral band)
  LesionSpec edema;
  edema.center_mm = {0, 0, 0};
  edema.radii_mm = {16, 16, 16};
  edema.subregion = SubregionLabel::Edema;
  edema.intensity = lesion_table(300, 300, 470, 360, 1300);
  spec.lesions.push_back(edema);

  LesionSpec core;
  core.center_mm = {0, 0, 0};
  core.radii_mm = {10, 10, 10};
  core.subregion = SubregionLabel::NonEnhancing;
  core.intensity = lesion_table(350, 350, 300, 300, 600);
  spec.lesions.push_back(core);

  LesionSpec enhancing;
  enhancing.center_mm = {3, 0, 0};
  enhancing.radii_mm = {5, 5, 5};
  enhancing.subregion = SubregionLabel::Enhancing;
  enhancing.intensity = lesion_table(350, 470, 300, 300, 600);
  spec.lesions.push_back(enhancing);

  LesionSpec trapped;
  trapped.center_mm = {14, 0, 0};
  trapped.radii_mm = {5.5, 5.5, 5.5};
  trapped.subregion = SubregionLabel::TrappedCsf;
  trapped.intensity = lesion_table(150, 150, 500, 100, 1600);
  spec.lesions.push_back(trapped);

  LesionSpec hemorrhage;
  hemorrhage.center_mm = {0, 17.5, 0};
  hemorrhage.radii_mm = {5.5, 5.5, 5.5};
  hemorrhage.subregion = SubregionLabel::Hemorrhage;
  hemorrhage.intensity = lesion_table(450, 450, 150, 300, 1200);
  spec.lesions.push_back(hemorrhage);

  LesionSpec late_necrosis;
  late_necrosis.center_mm = {0, 28, 0};
  late_necrosis.radii_mm = {5.5, 5.5, 5.5};
  late_necrosis.subregion = SubregionLabel::LateNecrosis;
  late_necrosis.intensity = lesion_table(300, 300, 470, 350, 1400);
  spec.lesions.push_back(late_necrosis);

  LesionSpec cyst;
  cyst.center_mm = {-16, 0, 0};
  cyst.radii_mm = {5.5, 5.5, 5.5};
  cyst.subregion = SubregionLabel::Cyst;
  cyst.intensity = lesion_table(200, 200, 480, 240, 1800);
  spec.lesions.push_back(cyst);

  LesionSpec early_necrosis;
  early_necrosis.center_mm = {0, 0, 16.5};
  early_necrosis.radii_mm = {5.5, 5.5, 5.5};
  early_necrosis.subregion = SubregionLabel::EarlyNecrosis;
  early_necrosis.intensity = lesion_table(470, 470, 300, 300, 1400);
  spec.lesions.push_back(early_necrosis);

  return spec;
}

PhantomSpec dipg_spec() {
  PhantomSpec spec;
  spec.case_id = "standard-dipg";
  spec.tumor_type = TumorType::Dipg;
  spec.noise_seed = 20260302;
  standard_tissue_table(spec, false);

  LesionSpec edema;
  edema.center_mm = {0, 0, 0};
  edema.radii_mm = {15, 15, 15};
  edema.subregion = SubregionLabel::Edema;
  edema.intensity = lesion_table(300, 300, 470, 360, std::nullopt);
  spec.lesions.push_back(edema);

  LesionSpec core;
  core.center_mm = {0, 0, 0};
  core.radii_mm = {10, 10, 10};
  core.subregion = SubregionLabel::NonEnhancing;
  core.intensity = lesion_table(350, 350, 300, 520, std::nullopt);
  spec.lesions.push_back(core);

  return spec;
}

PhantomSpec lgg_spec() {
  PhantomSpec spec;
  spec.case_id = "standard-lgg";
  spec.tumor_type = TumorType::Lgg;
  spec.noise_seed = 20260303;
  standard_tissue_table(spec, false);

  LesionSpec core;
  core.center_mm = {0, 0, 0};
  core.radii_mm = {12, 12, 12};
  core.subregion = SubregionLabel::NonEnhancing;
  core.intensity = lesion_table(350, 350, 300, 520, std::nullopt);
  spec.lesions.push_back(core);

  return spec;
}

PhantomSpec healthy_spec(TumorType type) {
  PhantomSpec spec;
  spec.case_id = "healthy-" + to_string(type);
  spec.tumor_type = type;
  spec.noise_seed = 20260304;
  standard_tissue_table(spec, type == TumorType::Atrt);
  return spec;
}

PhantomSpec two_tissue_spec() {
  // equal WM(400) / GM(300) contrast on every scan; CSF dark on FLAIR so the
  // CSF threshold stays detectable
  PhantomSpec spec;
  spec.case_id = "two-tissue";
  spec.tumor_type = TumorType::Atrt;
  spec.noise_seed = 20260305;
  for (const Modality m : {Modality::T1, Modality::T1Post, Modality::T2, Modality::Adc}) {
    spec.tissue[m] = {{400, 10}, {300, 10}, {150, 10}};
  }
  spec.tissue[Modality::Flair] = {{400, 10}, {300, 10}, {100, 10}};
  return spec;
}

PhantomSpec preset_spec(const std::string& name) {
  if (name == "standard-atrt") return standard_atrt_spec();
  if (name == "standard-dipg") return dipg_spec();
  if (name == "standard-lgg") return lgg_spec();
  if (name == "healthy-atrt") return healthy_spec(TumorType::Atrt);
  if (name == "healthy-dipg") return healthy_spec(TumorType::Dipg);
  if (name == "healthy-lgg") return healthy_spec(TumorType::Lgg);
  if (name == "two-tissue") return two_tissue_spec();
  throw InputError("unknown phantom preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"standard-atrt", "standard-dipg", "standard-lgg", "healthy-atrt",
          "healthy-dipg",  "healthy-lgg",   "two-tissue"};
}

} // namespace pbts
