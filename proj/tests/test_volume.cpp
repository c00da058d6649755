#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "pbts/errors.hpp"
#include "pbts/rng.hpp"
#include "pbts/volume.hpp"

using namespace pbts;

namespace {

Grid small_grid(int n = 11, double s = 1.0) { return Grid{{n, n, n}, {s, s, s}}; }

// dense 3-D convolution oracle with zero padding, independent of the
// separable implementation
ScalarVolume dense_gaussian_oracle(const ScalarVolume& vol, double sigma_mm) {
  const Grid& g = vol.grid;
  std::array<std::vector<double>, 3> kernels;
  std::array<int, 3> radius;
  for (int a = 0; a < 3; ++a) {
    const double sv = sigma_mm / g.spacing[a];
    radius[a] = std::max(1, static_cast<int>(std::ceil(4.0 * sv)));
    kernels[a].resize(2 * radius[a] + 1);
    double sum = 0.0;
    for (int t = -radius[a]; t <= radius[a]; ++t) {
      kernels[a][t + radius[a]] = std::exp(-0.5 * (t / sv) * (t / sv));
      sum += kernels[a][t + radius[a]];
    }
    for (double& w : kernels[a]) w /= sum;
  }
  ScalarVolume out = vol;
  for (int k = 0; k < g.dims[2]; ++k) {
    for (int j = 0; j < g.dims[1]; ++j) {
      for (int i = 0; i < g.dims[0]; ++i) {
        double numer = 0.0, denom = 0.0;
        for (int dk = -radius[2]; dk <= radius[2]; ++dk) {
          for (int dj = -radius[1]; dj <= radius[1]; ++dj) {
            for (int di = -radius[0]; di <= radius[0]; ++di) {
              const int ni = i + di, nj = j + dj, nk = k + dk;
              if (!g.in_bounds(ni, nj, nk)) continue;
              const std::size_t nl = g.linear(ni, nj, nk);
              if (!vol.brain_mask[nl]) continue;
              const double w = kernels[0][di + radius[0]] * kernels[1][dj + radius[1]] *
                               kernels[2][dk + radius[2]];
              numer += w * vol.data[nl];
              denom += w;
            }
          }
        }
        const std::size_t l = g.linear(i, j, k);
        if (vol.brain_mask[l] && denom > 0.0) out.data[l] = numer / denom;
      }
    }
  }
  return out;
}

// independent flood fill using a queue and explicit visited set
int flood_fill_count(const LabelVolume& mask, bool diag) {
  std::set<std::size_t> seen;
  int comps = 0;
  const Grid& g = mask.grid;
  for (std::size_t s = 0; s < mask.labels.size(); ++s) {
    if (!mask.labels[s] || seen.count(s)) continue;
    ++comps;
    std::queue<std::size_t> q;
    q.push(s);
    seen.insert(s);
    while (!q.empty()) {
      const VoxelIndex p = g.index_of(q.front());
      q.pop();
      for (int dk = -1; dk <= 1; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0 && dk == 0) continue;
            if (!diag && std::abs(di) + std::abs(dj) + std::abs(dk) != 1) continue;
            const int ni = p.i + di, nj = p.j + dj, nk = p.k + dk;
            if (!g.in_bounds(ni, nj, nk)) continue;
            const std::size_t nl = g.linear(ni, nj, nk);
            if (mask.labels[nl] && !seen.count(nl)) {
              seen.insert(nl);
              q.push(nl);
            }
          }
        }
      }
    }
  }
  return comps;
}

// ball-offset enumeration oracle for dilation
LabelVolume dilate_by_offsets(const LabelVolume& mask, double radius_mm) {
  const Grid& g = mask.grid;
  std::vector<std::array<int, 3>> offsets;
  const int ri = static_cast<int>(std::ceil(radius_mm / g.spacing[0]));
  const int rj = static_cast<int>(std::ceil(radius_mm / g.spacing[1]));
  const int rk = static_cast<int>(std::ceil(radius_mm / g.spacing[2]));
  for (int dk = -rk; dk <= rk; ++dk) {
    for (int dj = -rj; dj <= rj; ++dj) {
      for (int di = -ri; di <= ri; ++di) {
        const double d2 = di * g.spacing[0] * di * g.spacing[0] +
                          dj * g.spacing[1] * dj * g.spacing[1] +
                          dk * g.spacing[2] * dk * g.spacing[2];
        if (d2 <= radius_mm * radius_mm * (1.0 + 1e-12)) offsets.push_back({di, dj, dk});
      }
    }
  }
  LabelVolume out = LabelVolume::zeros(g);
  for (std::size_t v = 0; v < mask.labels.size(); ++v) {
    if (!mask.labels[v]) continue;
    const VoxelIndex p = g.index_of(v);
    for (const auto& o : offsets) {
      const int ni = p.i + o[0], nj = p.j + o[1], nk = p.k + o[2];
      if (g.in_bounds(ni, nj, nk)) out.labels[g.linear(ni, nj, nk)] = 1;
    }
  }
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// threshold_mask
// ---------------------------------------------------------------------------

TEST_CASE("threshold_mask constant volumes") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(5), 0.6);
  LabelVolume m = threshold_mask(vol, 0.5, std::nullopt);
  CHECK(m.count_nonzero() == vol.grid.voxel_count());

  ScalarVolume low = ScalarVolume::filled(small_grid(5), 0.4);
  CHECK(threshold_mask(low, 0.5, std::nullopt).count_nonzero() == 0);
}

TEST_CASE("threshold_mask ramp selects exactly the voxels at or above the cut") {
  // ramp 0..1 over 11 voxels along i, constant in j,k
  ScalarVolume vol = ScalarVolume::filled(small_grid(11), 0.0);
  for (int k = 0; k < 11; ++k)
    for (int j = 0; j < 11; ++j)
      for (int i = 0; i < 11; ++i) vol.at(i, j, k) = i / 10.0;
  const LabelVolume m = threshold_mask(vol, 0.5, std::nullopt);
  // enumeration oracle
  std::size_t expected = 0;
  for (int i = 0; i < 11; ++i) {
    if (i / 10.0 >= 0.5) expected += 11 * 11;
  }
  CHECK(m.count_nonzero() == expected);
  CHECK(m.at(5, 0, 0) == 1);
  CHECK(m.at(4, 0, 0) == 0);
}

TEST_CASE("threshold_mask respects the brain mask and rejects bad bounds") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(4), 1.0);
  vol.brain_mask[0] = 0;
  const LabelVolume m = threshold_mask(vol, 0.5, std::nullopt);
  CHECK(m.labels[0] == 0);
  CHECK(m.count_nonzero() == vol.grid.voxel_count() - 1);
  CHECK_THROWS_AS(threshold_mask(vol, std::nullopt, std::nullopt), InputError);
  CHECK_THROWS_AS(threshold_mask(vol, 1.0, 0.0), InputError);
}

TEST_CASE("threshold partition property at a fixed cut") {
  Rng rng(11);
  ScalarVolume vol = ScalarVolume::filled(small_grid(7), 0.0);
  for (double& x : vol.data) x = rng.uniform();
  const double cut = 0.37;
  const LabelVolume above = threshold_mask(vol, cut, std::nullopt);
  const LabelVolume below = threshold_mask(vol, std::nullopt,
                                           std::nextafter(cut, -1.0)); // cut - epsilon
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    CHECK(above.labels[v] + below.labels[v] == 1); // disjoint cover
  }
}

// ---------------------------------------------------------------------------
// gaussian_smooth
// ---------------------------------------------------------------------------

TEST_CASE("gaussian_smooth preserves constants") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(9), 3.25);
  const ScalarVolume out = gaussian_smooth(vol, 2.0);
  for (std::size_t v = 0; v < out.data.size(); ++v) {
    CHECK(out.data[v] == doctest::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("gaussian_smooth impulse matches the dense convolution oracle and preserves mass") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(21), 0.0);
  vol.at(10, 10, 10) = 1.0;
  const double sigma = 1.3;
  const ScalarVolume out = gaussian_smooth(vol, sigma);
  const ScalarVolume oracle = dense_gaussian_oracle(vol, sigma);
  double sum = 0.0;
  for (std::size_t v = 0; v < out.data.size(); ++v) {
    CHECK(out.data[v] == doctest::Approx(oracle.data[v]).epsilon(1e-9));
    sum += out.data[v];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian_smooth with tiny sigma is the identity") {
  Rng rng(3);
  ScalarVolume vol = ScalarVolume::filled(small_grid(8), 0.0);
  for (double& x : vol.data) x = rng.uniform();
  const ScalarVolume out = gaussian_smooth(vol, 0.01);
  for (std::size_t v = 0; v < out.data.size(); ++v) {
    CHECK(out.data[v] == doctest::Approx(vol.data[v]).epsilon(1e-6));
  }
  CHECK_THROWS_AS(gaussian_smooth(vol, 0.0), InputError);
}

TEST_CASE("gaussian_smooth does not bleed across the mask and matches the masked oracle") {
  Rng rng(5);
  ScalarVolume vol = ScalarVolume::filled(small_grid(10), 0.0);
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    vol.data[v] = rng.uniform();
    vol.brain_mask[v] = rng.uniform() < 0.7 ? 1 : 0;
  }
  // poison the masked-out voxels: they must not influence the result
  ScalarVolume poisoned = vol;
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    if (!vol.brain_mask[v]) poisoned.data[v] = 1e9;
  }
  const ScalarVolume out = gaussian_smooth(poisoned, 1.1);
  const ScalarVolume oracle = dense_gaussian_oracle(vol, 1.1);
  for (std::size_t v = 0; v < out.data.size(); ++v) {
    if (vol.brain_mask[v]) {
      CHECK(out.data[v] == doctest::Approx(oracle.data[v]).epsilon(1e-9));
    }
  }
}

TEST_CASE("gaussian_smooth preserves the masked mean of a constant interior") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(12), 7.5);
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    const VoxelIndex p = vol.grid.index_of(v);
    vol.brain_mask[v] = (p.i >= 3 && p.i < 9 && p.j >= 3 && p.j < 9 && p.k >= 3 && p.k < 9);
  }
  const ScalarVolume out = gaussian_smooth(vol, 1.5);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < out.data.size(); ++v) {
    if (vol.brain_mask[v]) {
      sum += out.data[v];
      ++n;
    }
  }
  CHECK(sum / static_cast<double>(n) == doctest::Approx(7.5).epsilon(1e-6));
}

// ---------------------------------------------------------------------------
// connected_components
// ---------------------------------------------------------------------------

TEST_CASE("connected_components labels disjoint cubes by size") {
  LabelVolume mask = LabelVolume::zeros(small_grid(12));
  // 2x2x2 cube and a 1x1x1 voxel far away
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) mask.at(i, j, k) = 1;
  mask.at(10, 10, 10) = 1;
  const LabelVolume comps = connected_components(mask, Connectivity::Six);
  CHECK(comps.max_label() == 2);
  CHECK(comps.at(0, 0, 0) == 1); // larger component gets label 1
  CHECK(comps.at(10, 10, 10) == 2);
  const auto sizes = component_sizes(comps);
  CHECK(sizes[1] == 8);
  CHECK(sizes[2] == 1);
  CHECK(sizes[1] + sizes[2] == mask.count_nonzero());
}

TEST_CASE("connected_components empty mask and non-binary rejection") {
  LabelVolume mask = LabelVolume::zeros(small_grid(4));
  CHECK(connected_components(mask, Connectivity::Six).max_label() == 0);
  mask.labels[0] = 2;
  CHECK_THROWS_AS(connected_components(mask, Connectivity::Six), InputError);
}

TEST_CASE("connectivity 6 vs 26 on a diagonal-touching blob") {
  LabelVolume mask = LabelVolume::zeros(small_grid(8));
  // L-shaped 6-connected blob
  mask.at(1, 1, 1) = 1;
  mask.at(2, 1, 1) = 1;
  mask.at(2, 2, 1) = 1;
  // voxel touching only diagonally
  mask.at(3, 3, 2) = 1;
  const LabelVolume c6 = connected_components(mask, Connectivity::Six);
  const LabelVolume c26 = connected_components(mask, Connectivity::TwentySix);
  CHECK(c6.max_label() == 2);
  CHECK(c26.max_label() == 1);
  CHECK(c6.max_label() == flood_fill_count(mask, false));
  CHECK(c26.max_label() == flood_fill_count(mask, true));
}

TEST_CASE("component label counts sum to foreground count on random masks") {
  Rng rng(17);
  LabelVolume mask = LabelVolume::zeros(small_grid(10));
  for (auto& l : mask.labels) l = rng.uniform() < 0.25 ? 1 : 0;
  for (const Connectivity conn : {Connectivity::Six, Connectivity::TwentySix}) {
    const LabelVolume comps = connected_components(mask, conn);
    const auto sizes = component_sizes(comps);
    std::size_t total = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
      total += sizes[l];
      if (l >= 2) CHECK(sizes[l] <= sizes[l - 1]); // ordered by decreasing size
    }
    CHECK(total == mask.count_nonzero());
    CHECK(comps.max_label() == flood_fill_count(mask, conn == Connectivity::TwentySix));
  }
}

// ---------------------------------------------------------------------------
// morphology
// ---------------------------------------------------------------------------

TEST_CASE("dilate single voxel by one spacing gives the 6-neighborhood") {
  LabelVolume mask = LabelVolume::zeros(small_grid(7));
  mask.at(3, 3, 3) = 1;
  const LabelVolume out = morphology(mask, MorphOp::Dilate, 1.0);
  CHECK(out.count_nonzero() == 7);
  CHECK(out.at(3, 3, 3) == 1);
  CHECK(out.at(2, 3, 3) == 1);
  CHECK(out.at(4, 3, 3) == 1);
  CHECK(out.at(3, 2, 3) == 1);
  CHECK(out.at(3, 4, 3) == 1);
  CHECK(out.at(3, 3, 2) == 1);
  CHECK(out.at(3, 3, 4) == 1);
  CHECK(out.at(4, 4, 3) == 0);
}

TEST_CASE("morphology matches the ball-offset oracle on random masks, anisotropic grid") {
  Rng rng(23);
  Grid g{{9, 9, 9}, {1.0, 1.5, 2.0}};
  LabelVolume mask = LabelVolume::zeros(g);
  for (auto& l : mask.labels) l = rng.uniform() < 0.2 ? 1 : 0;
  for (const double radius : {1.0, 2.0, 2.5}) {
    const LabelVolume dil = morphology(mask, MorphOp::Dilate, radius);
    const LabelVolume oracle = dilate_by_offsets(mask, radius);
    CHECK(dil.labels == oracle.labels);
  }
}

TEST_CASE("closing a solid cube returns the cube; eroding one voxel empties it") {
  LabelVolume cube = LabelVolume::zeros(small_grid(12));
  for (int k = 3; k < 9; ++k)
    for (int j = 3; j < 9; ++j)
      for (int i = 3; i < 9; ++i) cube.at(i, j, k) = 1;
  const LabelVolume closed = morphology(cube, MorphOp::Close, 1.6);
  CHECK(closed.labels == cube.labels);

  LabelVolume single = LabelVolume::zeros(small_grid(7));
  single.at(3, 3, 3) = 1;
  CHECK(morphology(single, MorphOp::Erode, 1.0).count_nonzero() == 0);
}

TEST_CASE("morphology extensivity, anti-extensivity and monotonicity") {
  Rng rng(31);
  LabelVolume a = LabelVolume::zeros(small_grid(9));
  for (auto& l : a.labels) l = rng.uniform() < 0.4 ? 1 : 0;
  LabelVolume b = a; // b superset of a
  for (auto& l : b.labels) {
    if (!l && rng.uniform() < 0.2) l = 1;
  }
  const double r = 1.5;
  const LabelVolume da = morphology(a, MorphOp::Dilate, r);
  const LabelVolume db = morphology(b, MorphOp::Dilate, r);
  const LabelVolume ea = morphology(a, MorphOp::Erode, r);
  const LabelVolume eb = morphology(b, MorphOp::Erode, r);
  for (std::size_t v = 0; v < a.labels.size(); ++v) {
    CHECK(da.labels[v] >= a.labels[v]); // extensive
    CHECK(ea.labels[v] <= a.labels[v]); // anti-extensive
    CHECK(db.labels[v] >= da.labels[v]); // monotone
    CHECK(eb.labels[v] >= ea.labels[v]);
  }
  CHECK_THROWS_AS(morphology(a, MorphOp::Dilate, 0.0), InputError);
}

// ---------------------------------------------------------------------------
// masked_stats
// ---------------------------------------------------------------------------

TEST_CASE("masked_stats hand-computed values") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(4), 0.0);
  LabelVolume mask = LabelVolume::zeros(small_grid(4));

  vol.data[0] = 2.0;
  vol.data[1] = 2.0;
  vol.data[2] = 2.0;
  mask.labels[0] = mask.labels[1] = mask.labels[2] = 1;
  MaskedStats s = masked_stats(vol, mask);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std_dev == doctest::Approx(0.0));
  CHECK(s.count == 3);

  vol.data[0] = 1.0;
  vol.data[1] = 2.0;
  vol.data[2] = 3.0;
  s = masked_stats(vol, mask);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std_dev == doctest::Approx(1.0));

  LabelVolume empty = LabelVolume::zeros(small_grid(4));
  CHECK_THROWS_AS(masked_stats(vol, empty), InputError);

  LabelVolume one = LabelVolume::zeros(small_grid(4));
  one.labels[5] = 1;
  s = masked_stats(vol, one);
  CHECK(s.count == 1);
  CHECK(s.std_dev == 0.0);
}

TEST_CASE("masked_stats equals brute-force two-pass computation on random data") {
  Rng rng(41);
  ScalarVolume vol = ScalarVolume::filled(small_grid(8), 0.0);
  LabelVolume mask = LabelVolume::zeros(small_grid(8));
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    vol.data[v] = rng.normal() * 10.0 + 3.0;
    mask.labels[v] = rng.uniform() < 0.5 ? 1 : 0;
  }
  const MaskedStats s = masked_stats(vol, mask);
  // brute force
  std::vector<double> values;
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    if (mask.labels[v]) values.push_back(vol.data[v]);
  }
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  CHECK(s.mean == mean);
  CHECK(s.std_dev == sd);
  CHECK(s.count == values.size());
}

// ---------------------------------------------------------------------------
// volume invariants
// ---------------------------------------------------------------------------

TEST_CASE("scalar volume validation catches non-finite data inside the mask") {
  ScalarVolume vol = ScalarVolume::filled(small_grid(3), 1.0);
  vol.validate();
  vol.data[4] = std::nan("");
  CHECK_THROWS_AS(vol.validate(), InputError);
  vol.brain_mask[4] = 0; // non-finite outside the mask is allowed
  vol.validate();
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid({{0, 4, 4}, {1, 1, 1}}).validate(), InputError);
  CHECK_THROWS_AS(Grid({{4, 4, 4}, {0.0, 1, 1}}).validate(), InputError);
}
