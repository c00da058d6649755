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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pbts/errors.hpp"
#include "pbts/eval.hpp"
#include "pbts/nifti.hpp"
#include "pbts/phantom.hpp"
#include "pbts/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pbts;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitStage = 3;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out << text;
}

struct SegmentArgs {
  std::string type;
  std::string t1, t1post, t2, flair, adc, mask;
  std::string atlas_wm, atlas_gm;
  std::string config_path;
  std::string out_dir;
  std::string case_id = "case";
  std::string truth_wt, truth_subregions;
  std::string wt; // subregions subcommand only
  bool debug = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common_segment_options(CLI::App* cmd, SegmentArgs& args, bool with_wt) {
  cmd->add_option("--type", args.type, "tumor type: atrt | dipg | lgg")->required();
  cmd->add_option("--t1", args.t1, "T1 NIfTI")->required();
  cmd->add_option("--t1post", args.t1post, "T1 post-contrast NIfTI")->required();
  cmd->add_option("--t2", args.t2, "T2 NIfTI")->required();
  cmd->add_option("--flair", args.flair, "FLAIR NIfTI")->required();
  cmd->add_option("--adc", args.adc, "ADC NIfTI (required for ATRT)");
  cmd->add_option("--mask", args.mask,
                  "brain mask NIfTI (default: intersection of nonzero voxels)");
  cmd->add_option("--atlas-wm", args.atlas_wm, "WM atlas prior NIfTI (native space)")->required();
  cmd->add_option("--atlas-gm", args.atlas_gm, "GM atlas prior NIfTI (native space)")->required();
  cmd->add_option("--config", args.config_path, "run configuration JSON");
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--case-id", args.case_id, "case identifier used in reports");
  cmd->add_flag("--debug", args.debug, "write per-iteration posteriors and rule traces");
  cmd->add_option("--seed", args.seed, "random seed")->each([&args](const std::string&) {
    args.seed_given = true;
  });
  if (with_wt) {
    cmd->add_option("--wt", args.wt, "whole-tumor mask NIfTI to label")->required();
  } else {
    cmd->add_option("--truth-wt", args.truth_wt, "ground-truth WT mask (adds dice to report)");
    cmd->add_option("--truth-subregions", args.truth_subregions,
                    "ground-truth subregion labels (adds dice to report)");
  }
}

Study load_study_from_args(const SegmentArgs& args, TumorType type) {
  std::map<Modality, std::string> paths;
  paths[Modality::T1] = args.t1;
  paths[Modality::T1Post] = args.t1post;
  paths[Modality::T2] = args.t2;
  paths[Modality::Flair] = args.flair;
  if (!args.adc.empty()) paths[Modality::Adc] = args.adc;
  return load_study(paths, type, args.case_id, args.mask);
}

RunConfig load_config(const SegmentArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = run_config_from_json_text(read_text_file(args.config_path));
  if (args.debug) cfg.debug = true;
  if (args.seed_given) cfg.seed = args.seed;
  return cfg;
}

int run_segment(const SegmentArgs& args) {
  const TumorType type = tumor_type_from_string(args.type);
  const RunConfig cfg = load_config(args);
  const Study study = load_study_from_args(args, type);
  Affine atlas_affine;
  const ScalarVolume atlas_wm = read_scalar_nifti(args.atlas_wm, &atlas_affine);
  const ScalarVolume atlas_gm = read_scalar_nifti(args.atlas_gm);

  const PipelineOutput result = run_full(study, atlas_wm, atlas_gm, cfg);

  std::optional<DiceReport> wt_dice, sub_dice;
  if (!args.truth_wt.empty()) {
    const LabelVolume truth = read_label_nifti(args.truth_wt);
    wt_dice = evaluate_case(result.wt.wt_mask, truth, EvalMode::WholeTumor, study.case_id);
  }
  if (!args.truth_subregions.empty() && result.subregions) {
    const LabelVolume truth = read_label_nifti(args.truth_subregions);
    sub_dice = evaluate_case(result.subregions->labels, truth, EvalMode::Subregion, study.case_id);
  }

  write_outputs(result, study, cfg, args.out_dir, wt_dice, sub_dice);
  std::cout << "wrote " << args.out_dir << " (core " << result.wt.core_mask.count_nonzero()
            << " voxels, wt " << result.wt.wt_mask.count_nonzero() << " voxels"
            << (result.subregions ? ", subregions labeled" : "") << ")\n";
  return kExitOk;
}

int run_subregions(const SegmentArgs& args) {
  const TumorType type = tumor_type_from_string(args.type);
  const RunConfig cfg = load_config(args);
  const Study study = load_study_from_args(args, type);
  const ScalarVolume atlas_wm = read_scalar_nifti(args.atlas_wm);
  const ScalarVolume atlas_gm = read_scalar_nifti(args.atlas_gm);
  const LabelVolume wt = read_label_nifti(args.wt);

  const SubregionResult result = run_subregions_given_wt(study, wt, atlas_wm, atlas_gm, cfg);

  fs::create_directories(args.out_dir);
  write_nifti((fs::path(args.out_dir) / "subregions.nii.gz").string(), result.labels);
  if (cfg.debug)
    write_nifti((fs::path(args.out_dir) / "rule_trace.nii.gz").string(), result.rule_trace);
  write_text_file((fs::path(args.out_dir) / "codes.json").string(), codes_json_text());
  std::cout << "wrote " << args.out_dir << "/subregions.nii.gz\n";
  return kExitOk;
}

int run_phantom(const std::string& spec_path, const std::string& preset, const std::string& out_dir,
                std::uint64_t seed, bool seed_given) {
  PhantomSpec spec;
  if (!spec_path.empty()) {
    spec = phantom_spec_from_json_text(read_text_file(spec_path));
  } else if (!preset.empty()) {
    spec = preset_spec(preset);
  } else {
    throw InputError("phantom: give --spec FILE or --preset NAME");
  }
  if (seed_given) spec.noise_seed = seed;

  validate_phantom_spec(spec, TumorRuleConfig{}, SubregionConfig{});
  const PhantomCase phantom = generate_phantom(spec);

  fs::create_directories(out_dir);
  const auto file = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
  for (const auto& [m, vol] : phantom.study.modalities) {
    std::string name = to_string(m);
    std::transform(name.begin(), name.end(), name.begin(), ::tolower);
    write_nifti(file(name + ".nii.gz"), vol);
  }
  LabelVolume mask = LabelVolume::zeros(phantom.study.grid());
  for (std::size_t v = 0; v < mask.labels.size(); ++v) {
    mask.labels[v] = phantom.study.brain_mask()[v] ? 1 : 0;
  }
  write_nifti(file("mask.nii.gz"), mask);
  write_nifti(file("atlas_wm.nii.gz"), phantom.atlas_wm);
  write_nifti(file("atlas_gm.nii.gz"), phantom.atlas_gm);
  write_nifti(file("truth_tissue.nii.gz"), phantom.truth_tissue);
  write_nifti(file("truth_wt.nii.gz"), phantom.truth_wt);
  write_nifti(file("truth_subregions.nii.gz"), phantom.truth_subregions);
  write_text_file(file("codes.json"), codes_json_text());
  write_text_file(file("spec.json"), phantom_spec_to_json_text(spec));
  std::cout << "wrote phantom case " << spec.case_id << " to " << out_dir << "\n";
  return kExitOk;
}

int run_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& mode, const std::string& out_path, const std::string& csv_path,
                 const std::string& case_id) {
  const LabelVolume pred = read_label_nifti(pred_path);
  const LabelVolume truth = read_label_nifti(truth_path);
  EvalMode eval_mode;
  if (mode == "wt") {
    eval_mode = EvalMode::WholeTumor;
  } else if (mode == "subregion") {
    eval_mode = EvalMode::Subregion;
  } else {
    throw InputError("evaluate: mode must be wt or subregion");
  }
  const DiceReport report = evaluate_case(pred, truth, eval_mode, case_id);

  std::ostringstream json_text;
  write_dice_json({report}, json_text);
  write_text_file(out_path, json_text.str());
  if (!csv_path.empty()) {
    std::ostringstream csv_text;
    write_dice_csv({report}, csv_text);
    write_text_file(csv_path, csv_text.str());
  }
  for (const DiceEntry& e : report.entries) {
    std::cout << e.structure << ": ";
    if (e.dice) {
      std::cout << *e.dice;
    } else {
      std::cout << "undefined";
    }
    std::cout << "\n";
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"pbts - prior-knowledge segmentation of pediatric brain tumors and subregions"};
  app.require_subcommand(1);

  SegmentArgs seg_args;
  CLI::App* segment = app.add_subcommand(
      "segment", "run tissue -> whole-tumor -> subregion segmentation on one study");
  add_common_segment_options(segment, seg_args, false);

  SegmentArgs sub_args;
  CLI::App* subregions = app.add_subcommand(
      "subregions", "label subregions over a supplied whole-tumor mask");
  add_common_segment_options(subregions, sub_args, true);

  std::string phantom_spec_path, phantom_preset, phantom_out;
  std::uint64_t phantom_seed = 0;
  bool phantom_seed_given = false;
  CLI::App* phantom = app.add_subcommand("phantom", "generate a synthetic ground-truth case");
  phantom->add_option("--spec", phantom_spec_path, "phantom spec JSON");
  std::string preset_help = "built-in preset:";
  for (const std::string& name : preset_names()) preset_help += " " + name;
  phantom->add_option("--preset", phantom_preset, preset_help);
  phantom->add_option("--out", phantom_out, "output directory")->required();
  phantom->add_option("--seed", phantom_seed, "noise seed override")
      ->each([&phantom_seed_given](const std::string&) { phantom_seed_given = true; });

  std::string eval_pred, eval_truth, eval_mode, eval_out, eval_csv, eval_case = "case";
  CLI::App* evaluate = app.add_subcommand("evaluate", "dice scores of a prediction vs truth");
  evaluate->add_option("--pred", eval_pred, "predicted label NIfTI")->required();
  evaluate->add_option("--truth", eval_truth, "ground-truth label NIfTI")->required();
  evaluate->add_option("--mode", eval_mode, "wt | subregion")->required();
  evaluate->add_option("--out", eval_out, "output report JSON")->required();
  evaluate->add_option("--csv", eval_csv, "also write a CSV row per structure");
  evaluate->add_option("--case-id", eval_case, "case identifier");

  CLI11_PARSE(app, argc, argv);

  try {
    if (segment->parsed()) return run_segment(seg_args);
    if (subregions->parsed()) return run_subregions(sub_args);
    if (phantom->parsed())
      return run_phantom(phantom_spec_path, phantom_preset, phantom_out, phantom_seed,
                         phantom_seed_given);
    if (evaluate->parsed())
      return run_evaluate(eval_pred, eval_truth, eval_mode, eval_out, eval_csv, eval_case);
  } catch (const StageError& e) {
    std::cerr << "stage failure [" << e.stage() << "]: " << e.what() << "\n";
    return kExitStage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}
