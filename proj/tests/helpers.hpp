// shared helpers for the pbts test suites
#ifndef PBTS_TESTS_HELPERS_HPP
#define PBTS_TESTS_HELPERS_HPP

#include "pbts/phantom.hpp"
#include "pbts/stats.hpp"
#include "pbts/tissue.hpp"
#include "pbts/volume.hpp"

namespace pbts::testing {

inline LabelVolume mask_of_code(const LabelVolume& truth, std::int32_t code) {
  LabelVolume out = LabelVolume::zeros(truth.grid);
  for (std::size_t v = 0; v < truth.labels.size(); ++v) {
    out.labels[v] = truth.labels[v] == code ? 1 : 0;
  }
  return out;
}

inline LabelVolume mask_of_codes(const LabelVolume& truth, std::int32_t a, std::int32_t b) {
  LabelVolume out = LabelVolume::zeros(truth.grid);
  for (std::size_t v = 0; v < truth.labels.size(); ++v) {
    out.labels[v] = (truth.labels[v] == a || truth.labels[v] == b) ? 1 : 0;
  }
  return out;
}

/// TissueResult synthesized from phantom ground truth: masks from the truth
/// tissue codes, reference stats measured on them, CSF threshold from the
/// FLAIR histogram. Lets tumor/subregion units run without the tissue stage.
inline TissueResult fake_tissue_from_truth(const Study& study, const LabelVolume& truth_tissue) {
  TissueResult t;
  t.wm_mask = mask_of_code(truth_tissue, kTruthWm);
  t.gm_mask = mask_of_code(truth_tissue, kTruthGm);
  t.csf_mask = mask_of_code(truth_tissue, kTruthCsf);
  t.csf_threshold = detect_csf_threshold(study.scan(Modality::Flair));
  t.report.csf_threshold = t.csf_threshold;
  for (const auto& [m, vol] : study.modalities) {
    t.wm_stats[m] = masked_stats(vol, t.wm_mask);
    t.gm_stats[m] = masked_stats(vol, t.gm_mask);
  }
  return t;
}

/// Reduced-size ATRT phantom with the full subregion set (64^3 at 1.5 mm);
/// geometry scaled down from the standard preset so unit tests stay fast.
inline PhantomSpec small_atrt_spec() {
  PhantomSpec spec = standard_atrt_spec();
  spec.case_id = "small-atrt";
  spec.grid = Grid{{64, 64, 64}, {1.5, 1.5, 1.5}};
  spec.brain_radius_mm = 40.0;
  spec.csf_thickness_mm = 2.0;
  spec.gm_thickness_mm = 9.0;
  spec.lesions.clear();

  const auto sphere = [](std::array<double, 3> c, double r, SubregionLabel lab,
                         std::map<Modality, IntensityStat> intensity) {
    LesionSpec l;
    l.center_mm = c;
    l.radii_mm = {r, r, r};
    l.subregion = lab;
    l.intensity = std::move(intensity);
    return l;
  };
  const auto table = [](double t1, double t1post, double t2, double flair, double adc) {
    std::map<Modality, IntensityStat> out;
    const double sd = 8.0;
    out[Modality::T1] = {t1, sd};
    out[Modality::T1Post] = {t1post, sd};
    out[Modality::T2] = {t2, sd};
    out[Modality::Flair] = {flair, sd};
    out[Modality::Adc] = {adc, sd};
    return out;
  };

  spec.lesions.push_back(sphere({0, 0, 0}, 10.5, SubregionLabel::Edema,
                                table(300, 300, 470, 360, 1300)));
  spec.lesions.push_back(sphere({0, 0, 0}, 7.0, SubregionLabel::NonEnhancing,
                                table(350, 350, 300, 300, 600)));
  spec.lesions.push_back(sphere({2, 0, 0}, 3.7, SubregionLabel::Enhancing,
                                table(350, 470, 300, 300, 600)));
  spec.lesions.push_back(sphere({9, 0, 0}, 3.7, SubregionLabel::TrappedCsf,
                                table(150, 150, 500, 100, 1600)));
  spec.lesions.push_back(sphere({0, 12, 0}, 3.7, SubregionLabel::Hemorrhage,
                                table(450, 450, 150, 300, 1200)));
  spec.lesions.push_back(sphere({0, 21.5, 0}, 3.7, SubregionLabel::LateNecrosis,
                                table(300, 300, 470, 350, 1400)));
  spec.lesions.push_back(sphere({-11.5, 0, 0}, 3.7, SubregionLabel::Cyst,
                                table(200, 200, 480, 240, 1800)));
  spec.lesions.push_back(sphere({0, 0, 12}, 3.7, SubregionLabel::EarlyNecrosis,
                                table(470, 470, 300, 300, 1400)));
  return spec;
}

} // namespace pbts::testing

#endif
