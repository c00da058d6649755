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

#include "pbts/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>

#include "pbts/errors.hpp"
#include "pbts/mathstat.hpp"
#include "pbts/rng.hpp"

namespace pbts {

// ---------------------------------------------------------------------------
// KDE
// ---------------------------------------------------------------------------

double DensityModel::evaluate(double x) const {
  double acc = 0.0;
  for (double s : samples) acc += normal_pdf((x - s) / bandwidth);
  return acc / (static_cast<double>(samples.size()) * bandwidth);
}

DensityFn DensityModel::tabulated(int grid_points) const {
  if (grid_points < 2) throw InputError("tabulated: need at least 2 grid points");
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn_it - 6.0 * bandwidth;
  const double hi = *mx_it + 6.0 * bandwidth;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  auto values = std::make_shared<std::vector<double>>(static_cast<std::size_t>(grid_points), 0.0);
  // scatter each kernel onto the grid points within 8 bandwidths; the
  // truncated tail is below 1e-14 of the kernel mass
  const double window = 8.0 * bandwidth;
  for (const double s : samples) {
    int g0 = static_cast<int>(std::ceil((s - window - lo) / step));
    int g1 = static_cast<int>(std::floor((s + window - lo) / step));
    g0 = std::max(g0, 0);
    g1 = std::min(g1, grid_points - 1);
    for (int g = g0; g <= g1; ++g) {
      const double z = (lo + g * step - s) / bandwidth;
      (*values)[static_cast<std::size_t>(g)] += std::exp(-0.5 * z * z);
    }
  }
  const double norm =
      1.0 / (static_cast<double>(samples.size()) * bandwidth * 2.506628274631000502);
  for (double& v : *values) v *= norm;
  return [lo, hi, step, values, grid_points](double x) -> double {
    if (x <= lo || x >= hi) return 0.0;
    const double pos = (x - lo) / step;
    int idx = static_cast<int>(pos);
    if (idx >= grid_points - 1) idx = grid_points - 2;
    const double frac = pos - static_cast<double>(idx);
    return (*values)[static_cast<std::size_t>(idx)] * (1.0 - frac) +
           (*values)[static_cast<std::size_t>(idx) + 1] * frac;
  };
}

DensityModel kde_fit(std::vector<double> samples, std::optional<double> bandwidth) {
  if (samples.size() < 2) throw InputError("kde_fit: need at least 2 samples");
  // samples are kept sorted so the model is exactly invariant under
  // permutation of the input
  std::sort(samples.begin(), samples.end());
  if (samples.front() == samples.back())
    throw InputError("kde_fit: need at least 2 distinct samples");

  DensityModel model;
  model.samples = std::move(samples);
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw InputError("kde_fit: bandwidth must be positive");
    model.bandwidth = *bandwidth;
    return model;
  }
  const SampleMoments m = sample_moments(model.samples);
  const double iqr =
      sorted_quantile(model.samples, 0.75) - sorted_quantile(model.samples, 0.25);
  double spread = m.std_dev;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  const double n = static_cast<double>(model.samples.size());
  const double h = 0.9 * spread * std::pow(n, -0.2);
  const double floor = 1e-6 * (model.samples.back() - model.samples.front());
  model.bandwidth = std::max(h, floor);
  return model;
}

// ---------------------------------------------------------------------------
// CSF threshold
// ---------------------------------------------------------------------------

CsfThreshold detect_csf_threshold(const ScalarVolume& flair, int grid_points,
                                  double peak_height_fraction, std::optional<double> bandwidth) {
  if (grid_points < 8) throw InputError("detect_csf_threshold: grid too coarse");
  std::vector<double> values;
  values.reserve(flair.data.size() / 4);
  for (std::size_t v = 0; v < flair.data.size(); ++v) {
    if (flair.brain_mask[v]) values.push_back(flair.data[v]);
  }
  if (values.empty()) throw InputError("detect_csf_threshold: empty brain mask");

  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  const DensityModel kde = kde_fit(std::move(values), bandwidth);

  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::vector<double> curve(static_cast<std::size_t>(grid_points));
  for (int g = 0; g < grid_points; ++g) {
    curve[static_cast<std::size_t>(g)] = kde.evaluate(lo + g * step);
  }
  const double global_max = *std::max_element(curve.begin(), curve.end());
  const double min_height = peak_height_fraction * global_max;

  // significant local maxima (strictly above both neighbors; one-sided at the ends)
  std::vector<int> raw_peaks;
  for (int g = 0; g < grid_points; ++g) {
    const double y = curve[static_cast<std::size_t>(g)];
    const bool left_ok = (g == 0) || y > curve[static_cast<std::size_t>(g) - 1];
    const bool right_ok = (g == grid_points - 1) || y > curve[static_cast<std::size_t>(g) + 1];
    if (left_ok && right_ok && y >= min_height) raw_peaks.push_back(g);
  }

  // merge peaklets that belong to one mode: two neighbors only count as
  // separate modes when the curve between them dips at least 25% below the
  // smaller of the two (estimation noise on a smooth KDE wiggles by ~1%)
  constexpr double kValleyDepth = 0.75;
  std::vector<int> peaks;
  for (const int p : raw_peaks) {
    if (peaks.empty()) {
      peaks.push_back(p);
      continue;
    }
    const int prev = peaks.back();
    double interior_min = curve[static_cast<std::size_t>(prev)];
    for (int g = prev + 1; g < p; ++g) {
      interior_min = std::min(interior_min, curve[static_cast<std::size_t>(g)]);
    }
    const double smaller =
        std::min(curve[static_cast<std::size_t>(prev)], curve[static_cast<std::size_t>(p)]);
    if (interior_min >= kValleyDepth * smaller) {
      // same mode; keep the taller representative
      if (curve[static_cast<std::size_t>(p)] > curve[static_cast<std::size_t>(prev)])
        peaks.back() = p;
    } else {
      peaks.push_back(p);
    }
  }
  if (peaks.size() < 2) {
    throw StageError("csf-threshold",
                     "no CSF valley found: FLAIR intensity density is unimodal; "
                     "supply a manual threshold");
  }
  const int csf_peak = peaks[0];
  const int next_peak = peaks[1];

  // valley = argmin of the curve strictly between the CSF peak and the next
  // significant peak (robust against micro-minima in empty intensity gaps)
  int valley = csf_peak + 1;
  for (int g = csf_peak + 1; g < next_peak; ++g) {
    if (curve[static_cast<std::size_t>(g)] < curve[static_cast<std::size_t>(valley)]) valley = g;
  }

  CsfThreshold out;
  out.peak_location = lo + csf_peak * step;
  out.valley_location = lo + valley * step;
  out.th = out.valley_location;
  return out;
}

// ---------------------------------------------------------------------------
// Probability-weighted sampling
// ---------------------------------------------------------------------------

std::vector<std::size_t> sample_voxel_indices(const std::vector<double>& prob,
                                              const std::vector<std::uint8_t>& mask, std::size_t n,
                                              std::uint64_t seed) {
  if (prob.size() != mask.size()) throw InputError("sample_voxel_indices: size mismatch");
  if (n == 0) throw InputError("sample_voxel_indices: n must be positive");
  std::vector<std::size_t> voxels;
  std::vector<double> cum;
  voxels.reserve(prob.size() / 4);
  cum.reserve(prob.size() / 4);
  double total = 0.0;
  for (std::size_t v = 0; v < prob.size(); ++v) {
    if (!mask[v] || !(prob[v] > 0.0)) continue;
    total += prob[v];
    voxels.push_back(v);
    cum.push_back(total);
  }
  if (voxels.empty() || !(total > 0.0))
    throw InputError("sample_voxel_indices: probability field sums to zero");

  Rng rng(seed);
  std::vector<std::size_t> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t pos = std::min(static_cast<std::size_t>(it - cum.begin()), voxels.size() - 1);
    out[s] = voxels[pos];
  }
  return out;
}

std::vector<double> sample_by_probability(const ScalarVolume& vol, const std::vector<double>& prob,
                                          std::size_t n, std::uint64_t seed) {
  const std::vector<std::size_t> idx = sample_voxel_indices(prob, vol.brain_mask, n, seed);
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) out[s] = vol.data[idx[s]];
  return out;
}

// ---------------------------------------------------------------------------
// MCD
// ---------------------------------------------------------------------------

namespace {

// Small dense SPD helpers (d <= ~6). Row-major d x d.
struct SpdMatrix {
  int d = 0;
  std::vector<double> chol; // lower-triangular Cholesky factor
  double det = 0.0;
  bool ok = false;
};

SpdMatrix cholesky(const std::vector<double>& a, int d) {
  SpdMatrix m;
  m.d = d;
  m.chol.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a[static_cast<std::size_t>(i) * d + j];
      for (int k = 0; k < j; ++k) {
        sum -= m.chol[static_cast<std::size_t>(i) * d + k] * m.chol[static_cast<std::size_t>(j) * d + k];
      }
      if (i == j) {
        if (sum <= 0.0 || !std::isfinite(sum)) return m; // not SPD
        m.chol[static_cast<std::size_t>(i) * d + j] = std::sqrt(sum);
        logdet += std::log(sum);
      } else {
        m.chol[static_cast<std::size_t>(i) * d + j] =
            sum / m.chol[static_cast<std::size_t>(j) * d + j];
      }
    }
  }
  m.det = std::exp(logdet);
  m.ok = true;
  return m;
}

// squared Mahalanobis distance via two triangular solves
double maha_sq(const SpdMatrix& m, const double* x, const double* center, std::vector<double>& work) {
  const int d = m.d;
  for (int i = 0; i < d; ++i) {
    double sum = x[i] - center[i];
    for (int k = 0; k < i; ++k) sum -= m.chol[static_cast<std::size_t>(i) * d + k] * work[static_cast<std::size_t>(k)];
    work[static_cast<std::size_t>(i)] = sum / m.chol[static_cast<std::size_t>(i) * d + i];
  }
  double acc = 0.0;
  for (int i = 0; i < d; ++i) acc += work[static_cast<std::size_t>(i)] * work[static_cast<std::size_t>(i)];
  return acc;
}

void mean_cov(const std::vector<double>& pts, int d, const std::vector<std::size_t>& subset,
              std::vector<double>& center, std::vector<double>& cov) {
  const double h = static_cast<double>(subset.size());
  center.assign(static_cast<std::size_t>(d), 0.0);
  for (std::size_t s : subset) {
    for (int a = 0; a < d; ++a) center[static_cast<std::size_t>(a)] += pts[s * d + a];
  }
  for (int a = 0; a < d; ++a) center[static_cast<std::size_t>(a)] /= h;
  cov.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0);
  for (std::size_t s : subset) {
    for (int a = 0; a < d; ++a) {
      const double da = pts[s * d + a] - center[static_cast<std::size_t>(a)];
      for (int b = a; b < d; ++b) {
        const double db = pts[s * d + b] - center[static_cast<std::size_t>(b)];
        cov[static_cast<std::size_t>(a) * d + b] += da * db;
      }
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      cov[static_cast<std::size_t>(a) * d + b] /= (h - 1.0);
      cov[static_cast<std::size_t>(b) * d + a] = cov[static_cast<std::size_t>(a) * d + b];
    }
  }
}

struct Candidate {
  std::vector<std::size_t> subset;
  std::vector<double> center;
  std::vector<double> cov;
  double det = std::numeric_limits<double>::infinity();
  bool singular = false;
};

// One concentration step: h points nearest (Mahalanobis) to the current
// estimate become the next subset. Ties broken by point index.
bool c_step(const std::vector<double>& pts, std::size_t n, int d, std::size_t h, Candidate& cand) {
  const SpdMatrix m = cholesky(cand.cov, d);
  if (!m.ok) {
    cand.singular = true;
    cand.det = 0.0;
    return false;
  }
  std::vector<double> work(static_cast<std::size_t>(d));
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t p = 0; p < n; ++p) {
    dist[p] = {maha_sq(m, &pts[p * d], cand.center.data(), work), p};
  }
  std::sort(dist.begin(), dist.end());
  std::vector<std::size_t> next(h);
  for (std::size_t s = 0; s < h; ++s) next[s] = dist[s].second;
  std::sort(next.begin(), next.end());
  const bool same = next == cand.subset;
  cand.subset = std::move(next);
  mean_cov(pts, d, cand.subset, cand.center, cand.cov);
  const SpdMatrix m2 = cholesky(cand.cov, d);
  if (!m2.ok) {
    cand.singular = true;
    cand.det = 0.0;
    return false;
  }
  cand.det = m2.det;
  return !same;
}

void run_to_convergence(const std::vector<double>& pts, std::size_t n, int d, std::size_t h,
                        Candidate& cand, int max_iterations) {
  double prev = cand.det;
  for (int it = 0; it < max_iterations; ++it) {
    if (cand.singular) return;
    const bool changed = c_step(pts, n, d, h, cand);
    if (cand.singular) return;
    if (!changed || cand.det >= prev * (1.0 - 1e-14)) return;
    prev = cand.det;
  }
}

} // namespace

McdResult mcd_filter(const std::vector<double>& points, int dim, const RobustConfig& cfg) {
  if (dim < 1) throw InputError("mcd_filter: dim must be positive");
  if (points.size() % static_cast<std::size_t>(dim) != 0)
    throw InputError("mcd_filter: point array size is not a multiple of dim");
  const std::size_t n = points.size() / static_cast<std::size_t>(dim);
  if (n < static_cast<std::size_t>(dim) + 1)
    throw InputError("mcd_filter: need at least dim + 1 points");
  if (!(cfg.support_fraction >= 0.5 && cfg.support_fraction <= 1.0))
    throw InputError("mcd_filter: support_fraction must be in [0.5, 1]");
  const std::size_t h =
      static_cast<std::size_t>(std::ceil(cfg.support_fraction * static_cast<double>(n)));
  if (h < static_cast<std::size_t>(dim) + 1)
    throw InputError("mcd_filter: support subset smaller than dim + 1");

  std::vector<Candidate> pool;

  if (h == n) {
    // support fraction 1: the classical estimate, no search
    Candidate full;
    full.subset.resize(n);
    std::iota(full.subset.begin(), full.subset.end(), 0u);
    mean_cov(points, dim, full.subset, full.center, full.cov);
    const SpdMatrix m = cholesky(full.cov, dim);
    full.det = m.ok ? m.det : 0.0;
    full.singular = !m.ok;
    pool.push_back(std::move(full));
  } else {
    // FAST-MCD: alternate random h-subset starts with elemental
    // (dim + 1)-subset starts grown to h through one distance ranking.
    // Economy scheme for large n (2 concentration steps everywhere, the 10
    // best iterated to convergence); for small n every start is cheap and
    // is run to convergence directly.
    const bool converge_all = n <= 500;
    std::vector<std::size_t> scratch(n);
    for (int start = 0; start < std::max(1, cfg.num_starts); ++start) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(start)));
      Candidate cand;
      const std::size_t draw = (start % 2 == 1) ? std::min(n, static_cast<std::size_t>(dim) + 1) : h;
      std::iota(scratch.begin(), scratch.end(), 0u);
      for (std::size_t s = 0; s < draw; ++s) {
        const std::size_t pick = s + static_cast<std::size_t>(rng.uniform_index(n - s));
        std::swap(scratch[s], scratch[pick]);
      }
      cand.subset.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(draw));
      std::sort(cand.subset.begin(), cand.subset.end());
      mean_cov(points, dim, cand.subset, cand.center, cand.cov);
      const SpdMatrix m = cholesky(cand.cov, dim);
      if (!m.ok) continue; // degenerate start subset, discard
      cand.det = m.det;
      // the first c_step also grows elemental subsets to size h
      c_step(points, n, dim, h, cand);
      if (!cand.singular) c_step(points, n, dim, h, cand);
      if (converge_all && !cand.singular)
        run_to_convergence(points, n, dim, h, cand, cfg.max_iterations);
      pool.push_back(std::move(cand));
    }
    if (!converge_all) {
      // keep the 10 best (ties by restart order), run them to convergence
      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), 0u);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return pool[a].det < pool[b].det; });
      const std::size_t keep = std::min<std::size_t>(10, order.size());
      std::vector<Candidate> finalists;
      for (std::size_t r = 0; r < keep; ++r) {
        Candidate cand = pool[order[r]];
        run_to_convergence(points, n, dim, h, cand, cfg.max_iterations);
        finalists.push_back(std::move(cand));
      }
      pool = std::move(finalists);
    }
  }

  if (pool.empty()) {
    throw StageError("mcd", "singular covariance: sample has no full-rank subset");
  }
  const auto best_it = std::min_element(pool.begin(), pool.end(),
                                        [](const Candidate& a, const Candidate& b) { return a.det < b.det; });
  const Candidate& best = *best_it;
  if (best.singular || !(best.det > 0.0)) {
    throw StageError("mcd", "singular covariance: the minimizing h-subset is degenerate");
  }

  McdResult res;
  res.center = best.center;
  res.subset_det = best.det;
  res.support = best.subset;
  res.covariance = best.cov;

  const double cutoff = chi2_quantile(0.975, dim);
  std::vector<double> work(static_cast<std::size_t>(dim));

  const auto flag_inliers = [&](const SpdMatrix& m, const std::vector<double>& center,
                                std::vector<std::uint8_t>& out) {
    out.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double d2 = maha_sq(m, &points[p * static_cast<std::size_t>(dim)], center.data(), work);
      out[p] = d2 <= cutoff ? 1 : 0;
    }
  };

  std::vector<std::uint8_t> flags;
  if (h == n) {
    // classical estimate, no correction or reweighting
    const SpdMatrix m = cholesky(res.covariance, dim);
    if (!m.ok) throw StageError("mcd", "singular covariance");
    flag_inliers(m, res.center, flags);
    res.inliers = std::move(flags);
    return res;
  }

  // empirical consistency correction: rescale the raw half-sample scatter so
  // the median squared distance matches the chi-square median
  {
    const SpdMatrix raw = cholesky(res.covariance, dim);
    if (!raw.ok) throw StageError("mcd", "singular covariance");
    std::vector<double> d2(n);
    for (std::size_t p = 0; p < n; ++p) {
      d2[p] = maha_sq(raw, &points[p * static_cast<std::size_t>(dim)], res.center.data(), work);
    }
    std::sort(d2.begin(), d2.end());
    const double med = sorted_quantile(d2, 0.5);
    const double factor = med / chi2_quantile(0.5, dim);
    if (factor > 0.0 && std::isfinite(factor)) {
      for (double& c : res.covariance) c *= factor;
    }
  }
  const SpdMatrix corrected = cholesky(res.covariance, dim);
  if (!corrected.ok) throw StageError("mcd", "singular corrected covariance");
  flag_inliers(corrected, res.center, flags);

  // reweighting step: classical estimate over the flagged-in points,
  // rescaled by the 97.5% trimming consistency factor, then re-flag
  std::vector<std::size_t> kept;
  for (std::size_t p = 0; p < n; ++p) {
    if (flags[p]) kept.push_back(p);
  }
  if (kept.size() >= static_cast<std::size_t>(dim) + 1 && kept.size() < n) {
    std::vector<double> rw_center, rw_cov;
    mean_cov(points, dim, kept, rw_center, rw_cov);
    const double rw_factor = 0.975 / regularized_gamma_p(0.5 * (dim + 2), 0.5 * cutoff);
    for (double& c : rw_cov) c *= rw_factor;
    const SpdMatrix rw = cholesky(rw_cov, dim);
    if (rw.ok) {
      res.center = std::move(rw_center);
      res.covariance = std::move(rw_cov);
      flag_inliers(rw, res.center, flags);
    }
  }
  res.inliers = std::move(flags);
  return res;
}

} // namespace pbts
