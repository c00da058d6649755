#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "pbts/errors.hpp"
#include "pbts/eval.hpp"
#include "pbts/rng.hpp"
#include "pbts/subregion.hpp"

using namespace pbts;
using namespace pbts::testing;

namespace {

// whole-tumor result taken straight from phantom ground truth
WholeTumorResult truth_wt_result(const PhantomCase& phantom) {
  WholeTumorResult wt;
  wt.core_mask =
      mask_of_codes(phantom.truth_subregions, static_cast<std::int32_t>(SubregionLabel::Enhancing),
                    static_cast<std::int32_t>(SubregionLabel::NonEnhancing));
  wt.wt_mask = phantom.truth_wt;
  wt.provenance = LabelVolume::zeros(phantom.truth_wt.grid);
  for (std::size_t v = 0; v < wt.wt_mask.labels.size(); ++v) {
    if (wt.core_mask.labels[v]) {
      wt.provenance.labels[v] = kProvenanceCore;
    } else if (wt.wt_mask.labels[v]) {
      wt.provenance.labels[v] = kProvenanceExpansion;
    }
  }
  return wt;
}

struct SubregionFixture {
  PhantomCase phantom;
  TissueResult tissue;
  WholeTumorResult wt;
  SubregionResult result;

  SubregionFixture() : phantom(generate_phantom(small_atrt_spec())) {
    tissue = fake_tissue_from_truth(phantom.study, phantom.truth_tissue);
    wt = truth_wt_result(phantom);
    Study& study = phantom.study;
    study.modalities.emplace(
        Modality::T1Sub, compute_t1_sub(study.scan(Modality::T1Post), study.scan(Modality::T1)));
    tissue.wm_stats[Modality::T1Sub] = masked_stats(study.scan(Modality::T1Sub), tissue.wm_mask);
    tissue.gm_stats[Modality::T1Sub] = masked_stats(study.scan(Modality::T1Sub), tissue.gm_mask);
    result = classify_subregions(study, wt, tissue, SubregionConfig{});
  }
};

} // namespace

// ---------------------------------------------------------------------------
// compute_t1_sub
// ---------------------------------------------------------------------------

TEST_CASE("t1 subtraction is exact voxelwise arithmetic") {
  const Grid g{{5, 5, 5}, {1, 1, 1}};
  Rng rng(8);
  ScalarVolume t1 = ScalarVolume::filled(g, 0.0);
  for (double& x : t1.data) x = 100.0 * rng.normal();

  SUBCASE("identical inputs give all zeros") {
    const ScalarVolume sub = compute_t1_sub(t1, t1);
    for (double x : sub.data) CHECK(x == 0.0);
  }

  SUBCASE("constant offset is preserved") {
    ScalarVolume t1post = t1;
    for (double& x : t1post.data) x += 50.0;
    const ScalarVolume sub = compute_t1_sub(t1post, t1);
    // (x + 50) - x rounds in the last ulp for generic doubles
    for (double x : sub.data) CHECK(x == doctest::Approx(50.0).epsilon(1e-13));
  }

  SUBCASE("mixed signs are preserved, no clamping") {
    ScalarVolume t1post = t1;
    Rng rng2(9);
    for (double& x : t1post.data) x += 20.0 * rng2.normal();
    const ScalarVolume sub = compute_t1_sub(t1post, t1);
    bool saw_negative = false, saw_positive = false;
    for (std::size_t v = 0; v < sub.data.size(); ++v) {
      CHECK(sub.data[v] == t1post.data[v] - t1.data[v]);
      saw_negative |= sub.data[v] < 0.0;
      saw_positive |= sub.data[v] > 0.0;
    }
    CHECK(saw_negative);
    CHECK(saw_positive);
  }

  SUBCASE("grid mismatch is rejected") {
    const ScalarVolume other = ScalarVolume::filled(Grid{{4, 4, 4}, {1, 1, 1}}, 0.0);
    CHECK_THROWS_AS(compute_t1_sub(other, t1), InputError);
  }
}

// ---------------------------------------------------------------------------
// classify_subregions on the full ATRT phantom
// ---------------------------------------------------------------------------

TEST_CASE("subregion labels form an exact partition of the whole tumor") {
  const SubregionFixture fx;
  std::size_t labeled = 0;
  for (std::size_t v = 0; v < fx.wt.wt_mask.labels.size(); ++v) {
    if (fx.wt.wt_mask.labels[v]) {
      CHECK(fx.result.labels.labels[v] != 0);
      CHECK(fx.result.rule_trace.labels[v] >= 1);
      CHECK(fx.result.rule_trace.labels[v] <= 8);
      ++labeled;
    } else {
      CHECK(fx.result.labels.labels[v] == 0);
      CHECK(fx.result.rule_trace.labels[v] == 0);
    }
  }
  CHECK(labeled == fx.wt.wt_mask.count_nonzero());
}

TEST_CASE("each planted subregion is recovered") {
  const SubregionFixture fx;
  const DiceReport report = evaluate_case(fx.result.labels, fx.phantom.truth_subregions,
                                          EvalMode::Subregion, "small-atrt");
  for (const char* name : {"enhancing", "non_enhancing", "edema", "necrosis", "hemorrhage",
                           "cyst", "trapped_csf"}) {
    const DiceEntry* e = report.find(name);
    REQUIRE(e != nullptr);
    REQUIRE(e->dice.has_value());
    CHECK(*e->dice >= 0.90);
  }
}

TEST_CASE("core-only labels stay inside the core; edema stays inside the band") {
  const SubregionFixture fx;
  const LabelVolume band = morphology(fx.wt.core_mask, MorphOp::Dilate, 10.0,
                                      &fx.phantom.study.brain_mask());
  for (std::size_t v = 0; v < fx.result.labels.labels.size(); ++v) {
    const std::int32_t l = fx.result.labels.labels[v];
    if (l == static_cast<std::int32_t>(SubregionLabel::Enhancing) ||
        l == static_cast<std::int32_t>(SubregionLabel::NonEnhancing)) {
      CHECK(fx.wt.core_mask.labels[v] == 1);
    }
    if (l == static_cast<std::int32_t>(SubregionLabel::Edema)) {
      CHECK(band.labels[v] == 1);
      CHECK(fx.wt.core_mask.labels[v] == 0);
    }
  }
}

TEST_CASE("trapped CSF is darker than every cyst voxel on FLAIR") {
  const SubregionFixture fx;
  const ScalarVolume& flair = fx.phantom.study.scan(Modality::Flair);
  double max_trapped = -1e300, min_cyst = 1e300;
  for (std::size_t v = 0; v < fx.result.labels.labels.size(); ++v) {
    const std::int32_t l = fx.result.labels.labels[v];
    if (l == static_cast<std::int32_t>(SubregionLabel::TrappedCsf)) {
      max_trapped = std::max(max_trapped, flair.data[v]);
    }
    if (l == static_cast<std::int32_t>(SubregionLabel::Cyst)) {
      min_cyst = std::min(min_cyst, flair.data[v]);
    }
  }
  CHECK(max_trapped < min_cyst);
  CHECK(max_trapped < fx.tissue.csf_threshold.th);
}

TEST_CASE("scaling single scans by positive constants changes no label") {
  const SubregionFixture fx;
  PhantomCase scaled = fx.phantom;
  scaled.study.modalities.erase(Modality::T1Sub);
  for (double& x : scaled.study.modalities.at(Modality::T2).data) x *= 2.0;
  for (double& x : scaled.study.modalities.at(Modality::Flair).data) x *= 0.5;
  Study& study = scaled.study;
  study.modalities.emplace(
      Modality::T1Sub, compute_t1_sub(study.scan(Modality::T1Post), study.scan(Modality::T1)));
  // stats and CSF threshold recomputed from the scaled study, as the
  // pipeline would
  TissueResult tissue = fake_tissue_from_truth(study, scaled.truth_tissue);
  tissue.wm_stats[Modality::T1Sub] = masked_stats(study.scan(Modality::T1Sub), tissue.wm_mask);
  tissue.gm_stats[Modality::T1Sub] = masked_stats(study.scan(Modality::T1Sub), tissue.gm_mask);
  const SubregionResult res = classify_subregions(study, fx.wt, tissue, SubregionConfig{});
  CHECK(res.labels.labels == fx.result.labels.labels);
  CHECK(res.rule_trace.labels == fx.result.rule_trace.labels);
}

TEST_CASE("rule trace is consistent with the assigned labels") {
  const SubregionFixture fx;
  for (std::size_t v = 0; v < fx.result.labels.labels.size(); ++v) {
    const std::int32_t rule = fx.result.rule_trace.labels[v];
    const std::int32_t label = fx.result.labels.labels[v];
    if (rule == 1) CHECK(label == static_cast<std::int32_t>(SubregionLabel::Enhancing));
    if (rule == 2) CHECK(label == static_cast<std::int32_t>(SubregionLabel::Hemorrhage));
    if (rule == 3) CHECK(label == static_cast<std::int32_t>(SubregionLabel::TrappedCsf));
    if (rule == 4) CHECK(label == static_cast<std::int32_t>(SubregionLabel::Cyst));
    if (rule == 5) CHECK(label == static_cast<std::int32_t>(SubregionLabel::EarlyNecrosis));
    if (rule == 6) {
      CHECK((label == static_cast<std::int32_t>(SubregionLabel::Edema) ||
             label == static_cast<std::int32_t>(SubregionLabel::LateNecrosis)));
    }
    if (rule == 7) CHECK(label == static_cast<std::int32_t>(SubregionLabel::NonEnhancing));
  }
}

TEST_CASE("threshold ordering violation swaps the cutoffs and records a warning") {
  SubregionFixture fx;
  SubregionConfig cfg;
  // force a CSF threshold above the cyst cutoff
  cfg.flair_csf_threshold = 1e6;
  const SubregionResult res = classify_subregions(fx.phantom.study, fx.wt, fx.tissue, cfg);
  REQUIRE_FALSE(res.warnings.empty());
  CHECK(res.warnings.front().find("swapped") != std::string::npos);
  // partition invariant still holds
  for (std::size_t v = 0; v < fx.wt.wt_mask.labels.size(); ++v) {
    if (fx.wt.wt_mask.labels[v]) CHECK(res.labels.labels[v] != 0);
  }
}

TEST_CASE("empty whole tumor is rejected") {
  SubregionFixture fx;
  WholeTumorResult empty;
  empty.core_mask = LabelVolume::zeros(fx.phantom.study.grid());
  empty.wt_mask = LabelVolume::zeros(fx.phantom.study.grid());
  empty.provenance = LabelVolume::zeros(fx.phantom.study.grid());
  CHECK_THROWS_AS(classify_subregions(fx.phantom.study, empty, fx.tissue, SubregionConfig{}),
                  InputError);
}

// ---------------------------------------------------------------------------
// merge_necrosis
// ---------------------------------------------------------------------------

TEST_CASE("necrosis merge maps both classes to one code and preserves counts") {
  const SubregionFixture fx;
  const LabelVolume merged = merge_necrosis(fx.result);
  std::map<std::int32_t, std::size_t> before, after;
  for (std::int32_t l : fx.result.labels.labels) before[l]++;
  for (std::int32_t l : merged.labels) after[l]++;
  const std::int32_t early = static_cast<std::int32_t>(SubregionLabel::EarlyNecrosis);
  const std::int32_t late = static_cast<std::int32_t>(SubregionLabel::LateNecrosis);
  CHECK(after[kMergedNecrosisCode] == before[early] + before[late]);
  CHECK(after[late] == 0);
  CHECK(after[static_cast<std::int32_t>(SubregionLabel::Cyst)] ==
        before[static_cast<std::int32_t>(SubregionLabel::Cyst)]);
  CHECK(before[early] > 0);
  CHECK(before[late] > 0);
}

TEST_CASE("necrosis merge of single-class and empty volumes") {
  LabelVolume vol = LabelVolume::zeros(Grid{{4, 4, 4}, {1, 1, 1}});
  CHECK(merge_necrosis(vol).count_nonzero() == 0);
  for (auto& l : vol.labels) l = static_cast<std::int32_t>(SubregionLabel::EarlyNecrosis);
  const LabelVolume merged = merge_necrosis(vol);
  for (std::int32_t l : merged.labels) CHECK(l == kMergedNecrosisCode);
}
