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

#include "pbts/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pbts/errors.hpp"
#include "pbts/nifti.hpp"

namespace pbts {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig JSON
// ---------------------------------------------------------------------------

namespace {

TissueClass tissue_class_from_string(const std::string& s) {
  if (s == "WM") return TissueClass::WM;
  if (s == "GM") return TissueClass::GM;
  throw InputError("config: reference tissue must be WM or GM, got " + s);
}

void check_known_keys(const json& j, const std::vector<std::string>& known,
                      const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InputError("config: unknown key \"" + key + "\" in " + where);
  }
}

} // namespace

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config json: ") + e.what());
  }
  RunConfig cfg;
  try {
    check_known_keys(j, {"tissue", "tumor", "subregion", "debug", "seed"}, "config");
    cfg.debug = j.value("debug", cfg.debug);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("tissue")) {
      const json& t = j["tissue"];
      check_known_keys(t,
                       {"iterations", "posterior_threshold", "posterior_smoothing_sigma_mm",
                        "csf_prior_value", "other_prior_value", "other_prior_floor",
                        "kde_samples_per_class", "kde_grid_points", "peak_height_fraction",
                        "density_table_points", "robust"},
                       "tissue");
      auto& c = cfg.tissue;
      c.iterations = t.value("iterations", c.iterations);
      c.posterior_threshold = t.value("posterior_threshold", c.posterior_threshold);
      c.posterior_smoothing_sigma_mm =
          t.value("posterior_smoothing_sigma_mm", c.posterior_smoothing_sigma_mm);
      c.csf_prior_value = t.value("csf_prior_value", c.csf_prior_value);
      c.other_prior_value = t.value("other_prior_value", c.other_prior_value);
      c.other_prior_floor = t.value("other_prior_floor", c.other_prior_floor);
      c.kde_samples_per_class = t.value("kde_samples_per_class", c.kde_samples_per_class);
      c.kde_grid_points = t.value("kde_grid_points", c.kde_grid_points);
      c.peak_height_fraction = t.value("peak_height_fraction", c.peak_height_fraction);
      c.density_table_points = t.value("density_table_points", c.density_table_points);
      if (t.contains("robust")) {
        const json& r = t["robust"];
        check_known_keys(r, {"support_fraction", "max_iterations", "num_starts"}, "robust");
        c.robust.support_fraction = r.value("support_fraction", c.robust.support_fraction);
        c.robust.max_iterations = r.value("max_iterations", c.robust.max_iterations);
        c.robust.num_starts = r.value("num_starts", c.robust.num_starts);
      }
    }
    if (j.contains("tumor")) {
      const json& t = j["tumor"];
      check_known_keys(t,
                       {"core_k_sigma", "expansion_k_sigma", "min_component_mm3",
                        "expansion_max_gap_mm", "core_reference"},
                       "tumor");
      auto& c = cfg.tumor;
      c.core_k_sigma = t.value("core_k_sigma", c.core_k_sigma);
      c.expansion_k_sigma = t.value("expansion_k_sigma", c.expansion_k_sigma);
      c.min_component_mm3 = t.value("min_component_mm3", c.min_component_mm3);
      c.expansion_max_gap_mm = t.value("expansion_max_gap_mm", c.expansion_max_gap_mm);
      if (t.contains("core_reference"))
        c.core_reference = tissue_class_from_string(t["core_reference"].get<std::string>());
    }
    if (j.contains("subregion")) {
      const json& t = j["subregion"];
      check_known_keys(t,
                       {"enhance_k_sigma", "t2_dark_k_sigma", "t1_bright_k_sigma",
                        "t2_bright_k_sigma", "flair_csf_threshold", "flair_cyst_k_sigma",
                        "peritumoral_band_mm", "reference"},
                       "subregion");
      auto& c = cfg.subregion;
      c.enhance_k_sigma = t.value("enhance_k_sigma", c.enhance_k_sigma);
      c.t2_dark_k_sigma = t.value("t2_dark_k_sigma", c.t2_dark_k_sigma);
      c.t1_bright_k_sigma = t.value("t1_bright_k_sigma", c.t1_bright_k_sigma);
      c.t2_bright_k_sigma = t.value("t2_bright_k_sigma", c.t2_bright_k_sigma);
      if (t.contains("flair_csf_threshold") && !t["flair_csf_threshold"].is_null())
        c.flair_csf_threshold = t["flair_csf_threshold"].get<double>();
      c.flair_cyst_k_sigma = t.value("flair_cyst_k_sigma", c.flair_cyst_k_sigma);
      c.peritumoral_band_mm = t.value("peritumoral_band_mm", c.peritumoral_band_mm);
      if (t.contains("reference"))
        c.reference = tissue_class_from_string(t["reference"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config json: ") + e.what());
  }
  return cfg;
}

std::string run_config_to_json_text(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["debug"] = cfg.debug;
  j["tissue"] = {{"iterations", cfg.tissue.iterations},
                 {"posterior_threshold", cfg.tissue.posterior_threshold},
                 {"posterior_smoothing_sigma_mm", cfg.tissue.posterior_smoothing_sigma_mm},
                 {"csf_prior_value", cfg.tissue.csf_prior_value},
                 {"other_prior_value", cfg.tissue.other_prior_value},
                 {"other_prior_floor", cfg.tissue.other_prior_floor},
                 {"kde_samples_per_class", cfg.tissue.kde_samples_per_class},
                 {"kde_grid_points", cfg.tissue.kde_grid_points},
                 {"peak_height_fraction", cfg.tissue.peak_height_fraction},
                 {"density_table_points", cfg.tissue.density_table_points},
                 {"robust",
                  {{"support_fraction", cfg.tissue.robust.support_fraction},
                   {"max_iterations", cfg.tissue.robust.max_iterations},
                   {"num_starts", cfg.tissue.robust.num_starts}}}};
  j["tumor"] = {{"core_k_sigma", cfg.tumor.core_k_sigma},
                {"expansion_k_sigma", cfg.tumor.expansion_k_sigma},
                {"min_component_mm3", cfg.tumor.min_component_mm3},
                {"expansion_max_gap_mm", cfg.tumor.expansion_max_gap_mm},
                {"core_reference", to_string(cfg.tumor.core_reference)}};
  json sub = {{"enhance_k_sigma", cfg.subregion.enhance_k_sigma},
              {"t2_dark_k_sigma", cfg.subregion.t2_dark_k_sigma},
              {"t1_bright_k_sigma", cfg.subregion.t1_bright_k_sigma},
              {"t2_bright_k_sigma", cfg.subregion.t2_bright_k_sigma},
              {"flair_cyst_k_sigma", cfg.subregion.flair_cyst_k_sigma},
              {"peritumoral_band_mm", cfg.subregion.peritumoral_band_mm},
              {"reference", to_string(cfg.subregion.reference)}};
  if (cfg.subregion.flair_csf_threshold) {
    sub["flair_csf_threshold"] = *cfg.subregion.flair_csf_threshold;
  } else {
    sub["flair_csf_threshold"] = nullptr;
  }
  j["subregion"] = sub;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

namespace {

Study with_t1_sub(const Study& study) {
  Study s = study;
  if (!s.has(Modality::T1Sub)) {
    s.modalities.emplace(Modality::T1Sub,
                         compute_t1_sub(s.scan(Modality::T1Post), s.scan(Modality::T1)));
  }
  return s;
}

template <typename Fn> auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

} // namespace

PipelineOutput run_full(const Study& study_in, const ScalarVolume& atlas_wm,
                        const ScalarVolume& atlas_gm, const RunConfig& cfg) {
  Study study = with_t1_sub(study_in);
  study.validate();

  PipelineOutput out;
  out.tissue = stage("tissue", [&] {
    TissuePipelineConfig tcfg = cfg.tissue;
    tcfg.record_iterations = cfg.tissue.record_iterations || cfg.debug;
    return run_tissue_segmentation(study, atlas_wm, atlas_gm, tcfg, cfg.seed);
  });

  out.wt = stage("tumor", [&] {
    TumorReport detection;
    const LabelVolume core =
        detect_tumor_core(study, out.tissue, study.tumor_type, cfg.tumor, &detection);
    WholeTumorResult wt = expand_whole_tumor(core, study, out.tissue, study.tumor_type, cfg.tumor);
    wt.report.components = std::move(detection.components);
    return wt;
  });

  if (is_heterogeneous(study.tumor_type)) {
    out.subregions = stage("subregion", [&] {
      return classify_subregions(study, out.wt, out.tissue, cfg.subregion);
    });
  }
  return out;
}

SubregionResult run_subregions_given_wt(const Study& study_in, const LabelVolume& wt_mask,
                                        const ScalarVolume& atlas_wm, const ScalarVolume& atlas_gm,
                                        const RunConfig& cfg) {
  Study study = with_t1_sub(study_in);
  study.validate();
  if (!is_heterogeneous(study.tumor_type))
    throw InputError("subregion segmentation is only defined for heterogeneous tumor types "
                     "(ATRT, DIPG)");
  if (!wt_mask.grid.matches(study.grid()))
    throw InputError("supplied WT mask is not on the study grid");
  LabelVolume wt = wt_mask;
  for (auto& l : wt.labels) l = l != 0 ? 1 : 0;
  if (wt.count_nonzero() == 0) throw InputError("supplied WT mask is empty");

  const TissueResult tissue = stage("tissue", [&] {
    return run_tissue_segmentation(study, atlas_wm, atlas_gm, cfg.tissue, cfg.seed);
  });

  WholeTumorResult given;
  given.wt_mask = wt;
  given.core_mask = stage("tumor", [&] {
    return detect_tumor_core(study, tissue, study.tumor_type, cfg.tumor, nullptr, &wt);
  });
  given.provenance = LabelVolume::zeros(wt.grid);
  for (std::size_t v = 0; v < wt.labels.size(); ++v) {
    if (given.core_mask.labels[v]) {
      given.provenance.labels[v] = kProvenanceCore;
    } else if (wt.labels[v]) {
      given.provenance.labels[v] = kProvenanceExpansion;
    }
  }
  return stage("subregion", [&] { return classify_subregions(study, given, tissue, cfg.subregion); });
}

// ---------------------------------------------------------------------------
// Study loading
// ---------------------------------------------------------------------------

Study load_study(const std::map<Modality, std::string>& paths, TumorType type,
                 const std::string& case_id, const std::string& mask_path) {
  Study study;
  study.case_id = case_id;
  study.tumor_type = type;

  std::optional<Affine> reference_affine;
  std::optional<Grid> reference_grid;
  for (const auto& [m, path] : paths) {
    Affine affine;
    ScalarVolume vol = read_scalar_nifti(path, &affine);
    if (reference_affine) {
      if (!vol.grid.matches(*reference_grid))
        throw InputError("modality " + to_string(m) + " has a different grid: " + path);
      if (!affines_match(affine, *reference_affine))
        throw InputError("modality " + to_string(m) + " has a different affine: " + path);
    } else {
      reference_affine = affine;
      reference_grid = vol.grid;
    }
    study.modalities.emplace(m, std::move(vol));
  }
  if (study.modalities.empty()) throw InputError("no modalities supplied");

  std::vector<std::uint8_t> mask;
  if (!mask_path.empty()) {
    Affine affine;
    const LabelVolume mask_vol = read_label_nifti(mask_path, &affine);
    if (!mask_vol.grid.matches(*reference_grid))
      throw InputError("brain mask is not on the study grid: " + mask_path);
    if (!affines_match(affine, *reference_affine))
      throw InputError("brain mask has a different affine: " + mask_path);
    mask.resize(mask_vol.labels.size());
    for (std::size_t v = 0; v < mask.size(); ++v) mask[v] = mask_vol.labels[v] != 0 ? 1 : 0;
  } else {
    // brain-extracted inputs: mask = voxels nonzero on every modality
    mask.assign(reference_grid->voxel_count(), 1);
    for (const auto& [m, vol] : study.modalities) {
      for (std::size_t v = 0; v < mask.size(); ++v) {
        if (vol.data[v] == 0.0 || !std::isfinite(vol.data[v])) mask[v] = 0;
      }
    }
  }
  for (auto& [m, vol] : study.modalities) vol.brain_mask = mask;
  return study;
}

// ---------------------------------------------------------------------------
// Reports and outputs
// ---------------------------------------------------------------------------

namespace {

json stats_to_json(const std::map<Modality, MaskedStats>& stats) {
  json out = json::object();
  for (const auto& [m, s] : stats) {
    out[to_string(m)] = {{"mean", s.mean}, {"std", s.std_dev}, {"count", s.count}};
  }
  return out;
}

json dice_to_json(const DiceReport& report) {
  json entries = json::array();
  for (const DiceEntry& e : report.entries) {
    json je;
    je["structure"] = e.structure;
    if (e.dice) {
      je["dice"] = *e.dice;
    } else {
      je["dice"] = nullptr;
    }
    je["pred_voxels"] = e.pred_voxels;
    je["truth_voxels"] = e.truth_voxels;
    je["intersection"] = e.intersection;
    entries.push_back(je);
  }
  return entries;
}

} // namespace

std::string make_report_text(const PipelineOutput& result, const Study& study,
                             const RunConfig& cfg, const std::optional<DiceReport>& wt_dice,
                             const std::optional<DiceReport>& subregion_dice) {
  json j;
  j["case_id"] = study.case_id;
  j["tumor_type"] = to_string(study.tumor_type);
  j["config"] = json::parse(run_config_to_json_text(cfg));

  const TissueReport& tr = result.tissue.report;
  json tissue;
  tissue["csf_threshold"] = {{"th", tr.csf_threshold.th},
                             {"peak_location", tr.csf_threshold.peak_location},
                             {"valley_location", tr.csf_threshold.valley_location}};
  json iters = json::array();
  for (const TissueIterationRecord& rec : tr.iterations) {
    json ji;
    ji["sample_count"] = {{"WM", rec.sample_count[0]},
                          {"GM", rec.sample_count[1]},
                          {"CSF", rec.sample_count[2]},
                          {"other", rec.sample_count[3]}};
    ji["retained_count"] = {{"WM", rec.retained_count[0]},
                            {"GM", rec.retained_count[1]},
                            {"CSF", rec.retained_count[2]},
                            {"other", rec.retained_count[3]}};
    ji["mcd_inlier_fraction"] = {{"WM", rec.wm_inlier_fraction}, {"GM", rec.gm_inlier_fraction}};
    ji["mean_posterior_change"] = rec.mean_posterior_change;
    ji["max_sum_deviation"] = rec.max_sum_deviation;
    iters.push_back(ji);
  }
  tissue["iterations"] = iters;
  tissue["warnings"] = tr.warnings;
  tissue["wm_voxels"] = result.tissue.wm_mask.count_nonzero();
  tissue["gm_voxels"] = result.tissue.gm_mask.count_nonzero();
  tissue["csf_voxels"] = result.tissue.csf_mask.count_nonzero();
  tissue["wm_stats"] = stats_to_json(result.tissue.wm_stats);
  tissue["gm_stats"] = stats_to_json(result.tissue.gm_stats);
  j["tissue"] = tissue;

  json tumor;
  json comps = json::array();
  for (const ComponentDecision& c : result.wt.report.components) {
    comps.push_back({{"component", c.component},
                     {"volume_mm3", c.volume_mm3},
                     {"kept", c.kept},
                     {"reason", c.reason}});
  }
  tumor["components"] = comps;
  tumor["core_voxels"] = result.wt.core_mask.count_nonzero();
  tumor["wt_voxels"] = result.wt.wt_mask.count_nonzero();
  tumor["provenance"] = {{"core", result.wt.report.core_voxels},
                         {"expansion", result.wt.report.expansion_voxels}};
  j["tumor"] = tumor;

  if (result.subregions) {
    json sub;
    std::map<std::int32_t, std::size_t> counts;
    for (const std::int32_t l : result.subregions->labels.labels) {
      if (l != 0) counts[l]++;
    }
    json jc = json::object();
    for (const auto& [code, count] : counts) {
      jc[to_string(static_cast<SubregionLabel>(code))] = count;
    }
    sub["voxels_per_label"] = jc;
    sub["warnings"] = result.subregions->warnings;
    j["subregion"] = sub;
  }

  if (wt_dice) j["dice_wt"] = dice_to_json(*wt_dice);
  if (subregion_dice) j["dice_subregion"] = dice_to_json(*subregion_dice);
  return j.dump(2) + "\n";
}

std::string codes_json_text() {
  json j;
  json sub = json::object();
  for (std::int32_t c = 1; c <= kNumSubregionLabels; ++c) {
    sub[std::to_string(c)] = to_string(static_cast<SubregionLabel>(c));
  }
  j["subregions"] = sub;
  j["subregions_merged_necrosis"] =
      json::object({{std::to_string(kMergedNecrosisCode), "necrosis"}});
  j["tissue"] = {{"1", "WM"}, {"2", "GM"}, {"3", "CSF"}};
  j["wt"] = {{"1", "whole_tumor"}};
  j["wt_provenance"] = {{"1", "core"}, {"2", "expansion"}};
  return j.dump(2) + "\n";
}

void write_outputs(const PipelineOutput& result, const Study& study, const RunConfig& cfg,
                   const std::string& out_dir, const std::optional<DiceReport>& wt_dice,
                   const std::optional<DiceReport>& subregion_dice) {
  const fs::path out_path(out_dir);
  const fs::path tmp_path(out_dir + ".tmp");
  std::error_code ec;
  fs::remove_all(tmp_path, ec);
  fs::create_directories(tmp_path);

  const auto file = [&](const std::string& name) { return (tmp_path / name).string(); };

  write_nifti(file("tissue_wm.nii.gz"), result.tissue.wm_mask);
  write_nifti(file("tissue_gm.nii.gz"), result.tissue.gm_mask);
  write_nifti(file("tissue_csf.nii.gz"), result.tissue.csf_mask);
  write_nifti(file("wt.nii.gz"), result.wt.wt_mask);
  if (result.subregions) write_nifti(file("subregions.nii.gz"), result.subregions->labels);

  if (cfg.debug) {
    for (int c = 0; c < kNumTissueClasses; ++c) {
      const TissueClass cls = static_cast<TissueClass>(c);
      write_nifti(file("posterior_" + to_string(cls) + ".nii.gz"),
                  result.tissue.posterior.to_volume(cls));
    }
    for (std::size_t it = 0; it < result.tissue.report.iteration_posteriors.size(); ++it) {
      for (int c = 0; c < kNumTissueClasses; ++c) {
        const TissueClass cls = static_cast<TissueClass>(c);
        write_nifti(file("posterior_iter" + std::to_string(it + 1) + "_" + to_string(cls) +
                         ".nii.gz"),
                    result.tissue.report.iteration_posteriors[it].to_volume(cls));
      }
    }
    write_nifti(file("wt_core.nii.gz"), result.wt.core_mask);
    write_nifti(file("wt_provenance.nii.gz"), result.wt.provenance);
    if (result.subregions) write_nifti(file("rule_trace.nii.gz"), result.subregions->rule_trace);
    if (study.has(Modality::T1Sub)) write_nifti(file("t1sub.nii.gz"), study.scan(Modality::T1Sub));
  }

  {
    std::ofstream codes(file("codes.json"), std::ios::binary);
    codes << codes_json_text();
  }
  {
    std::ofstream report(file("report.json"), std::ios::binary);
    report << make_report_text(result, study, cfg, wt_dice, subregion_dice);
  }

  fs::remove_all(out_path, ec);
  fs::rename(tmp_path, out_path);
}

} // namespace pbts
