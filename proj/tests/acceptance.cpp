// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs the full pipeline on the built-in phantoms; expect a few
// minutes of runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pbts/errors.hpp"
#include "pbts/eval.hpp"
#include "pbts/mathstat.hpp"
#include "pbts/phantom.hpp"
#include "pbts/pipeline.hpp"
#include "pbts/rng.hpp"
#include "pbts/stats.hpp"
#include "pbts/tissue.hpp"

using namespace pbts;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(const std::string& name, const std::function<Outcome()>& fn) {
  Outcome outcome;
  try {
    outcome = fn();
  } catch (const std::exception& e) {
    outcome.pass = false;
    outcome.detail = std::string("exception: ") + e.what();
  }
  std::printf("%s  %-28s %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
              outcome.detail.c_str());
  std::fflush(stdout);
  if (!outcome.pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// shared standard-phantom artifacts (computed once, reused across criteria)
// ---------------------------------------------------------------------------

struct StandardRun {
  PhantomCase phantom;
  RunConfig cfg;
  TissueResult tissue;          // timed separately for the tissue criterion
  double tissue_seconds = 0.0;
  PipelineOutput full;
};

StandardRun* g_std = nullptr;

LabelVolume mask_of_code(const LabelVolume& truth, std::int32_t code) {
  LabelVolume out = LabelVolume::zeros(truth.grid);
  for (std::size_t v = 0; v < truth.labels.size(); ++v) {
    out.labels[v] = truth.labels[v] == code ? 1 : 0;
  }
  return out;
}

LabelVolume core_truth(const PhantomCase& phantom) {
  LabelVolume out = LabelVolume::zeros(phantom.truth_subregions.grid);
  for (std::size_t v = 0; v < out.labels.size(); ++v) {
    const std::int32_t l = phantom.truth_subregions.labels[v];
    out.labels[v] = (l == static_cast<std::int32_t>(SubregionLabel::Enhancing) ||
                     l == static_cast<std::int32_t>(SubregionLabel::NonEnhancing))
                        ? 1
                        : 0;
  }
  return out;
}

const StandardRun& standard_run() {
  if (!g_std) {
    g_std = new StandardRun{generate_phantom(standard_atrt_spec()), RunConfig{}, {}, 0.0, {}};
    g_std->cfg.seed = 20260606;
    validate_phantom_spec(standard_atrt_spec(), g_std->cfg.tumor, g_std->cfg.subregion);
    const auto t0 = std::chrono::steady_clock::now();
    g_std->tissue = run_tissue_segmentation(g_std->phantom.study, g_std->phantom.atlas_wm,
                                            g_std->phantom.atlas_gm, g_std->cfg.tissue,
                                            g_std->cfg.seed);
    g_std->tissue_seconds = seconds_since(t0);
    g_std->full = run_full(g_std->phantom.study, g_std->phantom.atlas_wm, g_std->phantom.atlas_gm,
                           g_std->cfg);
  }
  return *g_std;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

Outcome bayes_oracle_equivalence() {
  const Grid g{{32, 32, 32}, {1.5, 1.5, 1.5}};
  Rng rng(11);
  ScalarVolume scan = ScalarVolume::filled(g, 0.0);
  for (double& x : scan.data) x = 2.0 * rng.normal();
  ProbabilityMap prior = ProbabilityMap::zeros(g, scan.brain_mask);
  for (std::size_t v = 0; v < scan.data.size(); ++v) {
    double raw[4], total = 0.0;
    for (double& r : raw) {
      r = rng.uniform() + 1e-4;
      total += r;
    }
    for (int c = 0; c < 4; ++c) prior.classes[static_cast<std::size_t>(c)][v] = raw[c] / total;
  }
  // analytic class densities in place of KDE
  const double mean[4] = {-1.0, 0.0, 1.0, 2.5};
  const double sd[4] = {0.8, 1.0, 1.3, 0.6};
  std::array<DensityFn, 4> densities;
  for (int c = 0; c < 4; ++c) {
    const double m = mean[c], s = sd[c];
    densities[static_cast<std::size_t>(c)] = [m, s](double x) { return normal_pdf((x - m) / s) / s; };
  }

  const auto t0 = std::chrono::steady_clock::now();
  const ProbabilityMap post = bayes_update(densities, prior, scan);
  const double dt = seconds_since(t0);

  // independent direct evaluation of the posterior formula (same underflow
  // convention: evidence times the scan's intensity range below 1e-12)
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const double x : scan.data) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double range = hi - lo;
  double worst = 0.0;
  for (std::size_t v = 0; v < scan.data.size(); ++v) {
    const double x = scan.data[v];
    double joint[4], evidence = 0.0;
    for (int c = 0; c < 4; ++c) {
      const double pdf = std::exp(-0.5 * (x - mean[c]) * (x - mean[c]) / (sd[c] * sd[c])) /
                         (sd[c] * std::sqrt(2.0 * 3.14159265358979323846));
      joint[c] = pdf * prior.classes[static_cast<std::size_t>(c)][v];
      evidence += joint[c];
    }
    for (int c = 0; c < 4; ++c) {
      const double expected = evidence * range < 1e-12
                                  ? prior.classes[static_cast<std::size_t>(c)][v]
                                  : joint[c] / evidence;
      worst = std::max(worst, std::fabs(post.classes[static_cast<std::size_t>(c)][v] - expected));
    }
  }
  Outcome o;
  o.pass = worst <= 1e-10 && dt < 1.0;
  o.detail = "max |diff| = " + fmt(worst) + ", " + fmt(dt) + " s";
  return o;
}

Outcome posterior_normalization() {
  const StandardRun& run = standard_run();
  double worst = 0.0;
  for (const TissueIterationRecord& rec : run.tissue.report.iterations) {
    worst = std::max(worst, rec.max_sum_deviation);
  }
  worst = std::max(worst, run.tissue.posterior.max_sum_deviation());
  Outcome o;
  o.pass = run.tissue.report.iterations.size() == 3 && worst <= 1e-6;
  o.detail = "max |sum - 1| = " + fmt(worst) + " over 3 iterations";
  return o;
}

// exhaustive-enumeration oracle for the MCD criterion
double enumerate_mcd_det(const std::vector<double>& pts, int d, std::size_t h) {
  const std::size_t n = pts.size() / static_cast<std::size_t>(d);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> comb(h);
  std::iota(comb.begin(), comb.end(), 0u);
  while (true) {
    // covariance determinant of this subset
    double mx = 0.0, my = 0.0;
    for (std::size_t s : comb) {
      mx += pts[s * 2];
      my += pts[s * 2 + 1];
    }
    mx /= static_cast<double>(h);
    my /= static_cast<double>(h);
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t s : comb) {
      const double dx = pts[s * 2] - mx, dy = pts[s * 2 + 1] - my;
      cxx += dx * dx;
      cxy += dx * dy;
      cyy += dy * dy;
    }
    const double denom = static_cast<double>(h) - 1.0;
    best = std::min(best, (cxx / denom) * (cyy / denom) - (cxy / denom) * (cxy / denom));
    std::size_t i = h;
    bool done = true;
    while (i > 0) {
      --i;
      if (comb[i] != i + n - h) {
        ++comb[i];
        for (std::size_t j = i + 1; j < h; ++j) comb[j] = comb[j - 1] + 1;
        done = false;
        break;
      }
    }
    if (done) return best;
  }
}

Outcome mcd_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(500 + trial);
    const std::size_t n = 5 + rng.uniform_index(8); // 5..12
    std::vector<double> pts;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back(rng.normal() * (1.0 + rng.uniform()));
      pts.push_back(rng.normal() * (1.0 + rng.uniform()));
    }
    RobustConfig cfg;
    cfg.seed = 900 + static_cast<std::uint64_t>(trial);
    const McdResult res = mcd_filter(pts, 2, cfg);
    const std::size_t h = static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(n)));
    const double oracle = enumerate_mcd_det(pts, 2, h);
    worst = std::max(worst, std::fabs(res.subset_det - oracle) / std::max(1.0, std::fabs(oracle)));
  }
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = worst <= 1e-9 && dt < 10.0;
  o.detail = "20 configs, worst |det diff| = " + fmt(worst) + ", " + fmt(dt) + " s";
  return o;
}

Outcome csf_threshold_accuracy() {
  double worst_frac = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double w1 = 0.28 + 0.01 * i;
    const double m1 = 85.0 + 3.0 * i;
    const double s1 = 12.0 + 0.5 * i;
    const double m2 = 320.0 + 5.0 * i;
    const double s2 = 24.0 + 1.0 * i;
    // seeded mixture phantom packed into a volume
    const Grid g{{64, 64, 32}, {1, 1, 1}};
    ScalarVolume vol = ScalarVolume::filled(g, 0.0);
    Rng rng(7000 + static_cast<std::uint64_t>(i));
    for (double& x : vol.data) {
      x = rng.uniform() < w1 ? m1 + s1 * rng.normal() : m2 + s2 * rng.normal();
    }
    const CsfThreshold th = detect_csf_threshold(vol);
    // analytic valley of the true mixture density
    double best_x = m1, best_y = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 40000; ++s) {
      const double x = m1 + (m2 - m1) * s / 40000.0;
      const double y = w1 * normal_pdf((x - m1) / s1) / s1 +
                       (1.0 - w1) * normal_pdf((x - m2) / s2) / s2;
      if (y < best_y) {
        best_y = y;
        best_x = x;
      }
    }
    worst_frac = std::max(worst_frac, std::fabs(th.th - best_x) / (m2 - m1));
  }
  Outcome o;
  o.pass = worst_frac <= 0.10;
  o.detail = "worst |th - v| = " + fmt(worst_frac * 100.0) + "% of the mode distance";
  return o;
}

Outcome tissue_on_standard_phantom() {
  const StandardRun& run = standard_run();
  const LabelVolume truth_wm = mask_of_code(run.phantom.truth_tissue, kTruthWm);
  const LabelVolume truth_gm = mask_of_code(run.phantom.truth_tissue, kTruthGm);
  const auto wm = dice(run.tissue.wm_mask, truth_wm);
  const auto gm = dice(run.tissue.gm_mask, truth_gm);
  Outcome o;
  o.pass = wm && gm && *wm >= 0.95 && *gm >= 0.95 && run.tissue_seconds < 60.0;
  o.detail = "WM dice " + fmt(wm.value_or(0.0)) + ", GM dice " + fmt(gm.value_or(0.0)) + ", " +
             fmt(run.tissue_seconds) + " s at 96^3";
  return o;
}

Outcome whole_tumor_recovery() {
  const StandardRun& run = standard_run();
  const auto atrt = dice(run.full.wt.wt_mask, run.phantom.truth_wt);

  RunConfig cfg;
  cfg.seed = 777;
  const PhantomCase dipg = generate_phantom(dipg_spec());
  const PipelineOutput dipg_out = run_full(dipg.study, dipg.atlas_wm, dipg.atlas_gm, cfg);
  const auto dipg_dice = dice(dipg_out.wt.wt_mask, dipg.truth_wt);

  const PhantomCase lgg = generate_phantom(lgg_spec());
  const PipelineOutput lgg_out = run_full(lgg.study, lgg.atlas_wm, lgg.atlas_gm, cfg);
  const auto lgg_dice = dice(lgg_out.wt.wt_mask, lgg.truth_wt);
  const bool lgg_one_step = lgg_out.wt.wt_mask.labels == lgg_out.wt.core_mask.labels;

  Outcome o;
  o.pass = atrt && *atrt >= 0.90 && dipg_dice && *dipg_dice >= 0.90 && lgg_dice &&
           *lgg_dice >= 0.90 && lgg_one_step;
  o.detail = "ATRT " + fmt(atrt.value_or(0.0)) + ", DIPG " + fmt(dipg_dice.value_or(0.0)) +
             ", LGG " + fmt(lgg_dice.value_or(0.0)) +
             (lgg_one_step ? " (wt = core)" : " (wt != core!)");
  return o;
}

Outcome subregion_partition_and_recovery() {
  const StandardRun& run = standard_run();
  if (!run.full.subregions) return {false, "no subregion output"};
  const SubregionResult& sub = *run.full.subregions;

  std::size_t unlabeled = 0, outside = 0;
  for (std::size_t v = 0; v < run.full.wt.wt_mask.labels.size(); ++v) {
    if (run.full.wt.wt_mask.labels[v] && sub.labels.labels[v] == 0) ++unlabeled;
    if (!run.full.wt.wt_mask.labels[v] && sub.labels.labels[v] != 0) ++outside;
  }

  const DiceReport report = evaluate_case(sub.labels, run.phantom.truth_subregions,
                                          EvalMode::Subregion, "standard-atrt");
  double worst = 1.0;
  std::string worst_name = "-";
  for (const char* name : {"enhancing", "non_enhancing", "edema", "necrosis", "hemorrhage",
                           "cyst", "trapped_csf"}) {
    const DiceEntry* e = report.find(name);
    const double d = (e && e->dice) ? *e->dice : 0.0;
    if (d < worst) {
      worst = d;
      worst_name = name;
    }
  }
  Outcome o;
  o.pass = unlabeled == 0 && outside == 0 && worst >= 0.80;
  o.detail = std::to_string(unlabeled) + " unlabeled, worst structure " + worst_name + " dice " +
             fmt(worst);
  return o;
}

Outcome scale_invariance() {
  const StandardRun& run = standard_run();
  Study scaled = run.phantom.study;
  // T1 and T1-post share their constant: the T1-sub difference image is a
  // physical object that only rescales when both of its terms rescale
  // together (unequal factors produce a genuinely different image)
  const std::map<Modality, double> factors = {{Modality::T1, 4.0},
                                              {Modality::T1Post, 4.0},
                                              {Modality::T2, 3.0},
                                              {Modality::Flair, 0.5},
                                              {Modality::Adc, 2.0}};
  for (auto& [m, vol] : scaled.modalities) {
    const double f = factors.at(m);
    for (double& x : vol.data) x *= f;
  }
  const PipelineOutput out = run_full(scaled, run.phantom.atlas_wm, run.phantom.atlas_gm, run.cfg);

  std::size_t diffs = 0;
  const auto count_diffs = [&](const LabelVolume& a, const LabelVolume& b) {
    for (std::size_t v = 0; v < a.labels.size(); ++v) diffs += a.labels[v] != b.labels[v];
  };
  count_diffs(out.tissue.wm_mask, run.full.tissue.wm_mask);
  count_diffs(out.tissue.gm_mask, run.full.tissue.gm_mask);
  count_diffs(out.tissue.csf_mask, run.full.tissue.csf_mask);
  count_diffs(out.wt.core_mask, run.full.wt.core_mask);
  count_diffs(out.wt.wt_mask, run.full.wt.wt_mask);
  if (out.subregions && run.full.subregions) {
    count_diffs(out.subregions->labels, run.full.subregions->labels);
  } else if (out.subregions.has_value() != run.full.subregions.has_value()) {
    diffs += 1;
  }
  Outcome o;
  o.pass = diffs == 0;
  o.detail = std::to_string(diffs) + " label diffs across all output volumes";
  return o;
}

Outcome determinism() {
  const StandardRun& run = standard_run();
  const PipelineOutput again = run_full(run.phantom.study, run.phantom.atlas_wm,
                                        run.phantom.atlas_gm, run.cfg);
  const fs::path base = fs::temp_directory_path() / "pbts_acceptance_det";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base);
  write_outputs(run.full, run.phantom.study, run.cfg, (base / "a").string());
  write_outputs(again, run.phantom.study, run.cfg, (base / "b").string());

  std::size_t files = 0, mismatched = 0;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    ++files;
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(base / "b" / entry.path().filename(), std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    if (!fb || ba != bb) ++mismatched;
  }
  fs::remove_all(base, ec);
  Outcome o;
  o.pass = files > 0 && mismatched == 0;
  o.detail = std::to_string(files) + " files compared, " + std::to_string(mismatched) +
             " mismatched";
  return o;
}

Outcome dice_oracle() {
  const Grid g{{8, 8, 8}, {1, 1, 1}};
  std::size_t checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(42 + static_cast<std::uint64_t>(trial));
    LabelVolume a = LabelVolume::zeros(g), b = LabelVolume::zeros(g);
    const double fa = rng.uniform(), fb = rng.uniform();
    for (std::size_t v = 0; v < a.labels.size(); ++v) {
      a.labels[v] = rng.uniform() < fa ? 1 : 0;
      b.labels[v] = rng.uniform() < fb ? 1 : 0;
    }
    std::size_t na = 0, nb = 0, ni = 0;
    for (std::size_t v = 0; v < a.labels.size(); ++v) {
      na += a.labels[v];
      nb += b.labels[v];
      ni += a.labels[v] & b.labels[v];
    }
    const auto d = dice(a, b);
    if (na + nb == 0) {
      if (d.has_value()) return {false, "defined dice for two empty masks"};
    } else {
      if (!d || *d != 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb)) {
        return {false, "mismatch at trial " + std::to_string(trial)};
      }
    }
    ++checked;
  }
  return {true, std::to_string(checked) + " random mask pairs match exact counting"};
}

} // namespace

int main() {
  std::printf("pbts acceptance suite\n");
  run_criterion("bayes-oracle-equivalence", bayes_oracle_equivalence);
  run_criterion("mcd-exactness-small-n", mcd_exactness);
  run_criterion("csf-threshold-accuracy", csf_threshold_accuracy);
  run_criterion("dice-oracle", dice_oracle);
  run_criterion("posterior-normalization", posterior_normalization);
  run_criterion("tissue-standard-phantom", tissue_on_standard_phantom);
  run_criterion("whole-tumor-recovery", whole_tumor_recovery);
  run_criterion("subregion-partition", subregion_partition_and_recovery);
  run_criterion("scale-invariance", scale_invariance);
  run_criterion("determinism", determinism);
  if (g_failures) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
