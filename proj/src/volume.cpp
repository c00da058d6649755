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

#include "pbts/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pbts/errors.hpp"

namespace pbts {

// ---------------------------------------------------------------------------
// Grid / volumes
// ---------------------------------------------------------------------------

bool Grid::matches(const Grid& other, double spacing_tol) const {
  if (dims != other.dims) return false;
  for (int a = 0; a < 3; ++a) {
    if (std::fabs(spacing[a] - other.spacing[a]) > spacing_tol) return false;
  }
  return true;
}

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] <= 0) throw InputError("grid: dims must be positive");
    if (!(spacing[a] > 0.0)) throw InputError("grid: spacing must be strictly positive");
  }
}

ScalarVolume ScalarVolume::filled(const Grid& g, double value) {
  g.validate();
  ScalarVolume v;
  v.grid = g;
  v.data.assign(g.voxel_count(), value);
  v.brain_mask.assign(g.voxel_count(), 1);
  return v;
}

std::size_t ScalarVolume::mask_count() const {
  return static_cast<std::size_t>(
      std::count_if(brain_mask.begin(), brain_mask.end(), [](std::uint8_t m) { return m != 0; }));
}

void ScalarVolume::validate() const {
  grid.validate();
  if (data.size() != grid.voxel_count())
    throw InputError("scalar volume: data length does not match dims product");
  if (brain_mask.size() != grid.voxel_count())
    throw InputError("scalar volume: brain_mask length does not match dims product");
  for (std::size_t v = 0; v < data.size(); ++v) {
    if (brain_mask[v] && !std::isfinite(data[v]))
      throw InputError("scalar volume: non-finite intensity inside brain mask");
  }
}

LabelVolume LabelVolume::zeros(const Grid& g) {
  g.validate();
  LabelVolume v;
  v.grid = g;
  v.labels.assign(g.voxel_count(), 0);
  return v;
}

bool LabelVolume::is_binary() const {
  return std::all_of(labels.begin(), labels.end(), [](std::int32_t l) { return l == 0 || l == 1; });
}

std::size_t LabelVolume::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](std::int32_t l) { return l != 0; }));
}

std::int32_t LabelVolume::max_label() const {
  std::int32_t m = 0;
  for (std::int32_t l : labels) m = std::max(m, l);
  return m;
}

void LabelVolume::validate() const {
  grid.validate();
  if (labels.size() != grid.voxel_count())
    throw InputError("label volume: labels length does not match dims product");
  for (std::int32_t l : labels) {
    if (l < 0) throw InputError("label volume: negative label code");
  }
}

// ---------------------------------------------------------------------------
// threshold_mask
// ---------------------------------------------------------------------------

LabelVolume threshold_mask(const ScalarVolume& vol, std::optional<double> low,
                           std::optional<double> high) {
  if (!low && !high) throw InputError("threshold_mask: at least one bound required");
  if (low && high && *low > *high) throw InputError("threshold_mask: low > high");
  LabelVolume out = LabelVolume::zeros(vol.grid);
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    if (!vol.brain_mask[v]) continue;
    const double x = vol.data[v];
    if (low && x < *low) continue;
    if (high && x > *high) continue;
    out.labels[v] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// gaussian_smooth (mask-normalized separable convolution)
// ---------------------------------------------------------------------------

namespace {

std::vector<double> gaussian_kernel(double sigma_vox) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_vox)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double z = static_cast<double>(t) / sigma_vox;
    k[t + radius] = std::exp(-0.5 * z * z);
    sum += k[t + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

// Enumerates the base linear index of every grid line running along `axis`.
// The two fixed coordinates are (a, b): axis 0 -> (j, k), 1 -> (i, k), 2 -> (i, j).
template <typename Fn> void for_each_line(const Grid& g, int axis, Fn&& fn) {
  const std::array<int, 3> n = g.dims;
  const int na = (axis == 0) ? n[1] : n[0];
  const int nb = (axis == 2) ? n[1] : n[2];
  for (int b = 0; b < nb; ++b) {
    for (int a = 0; a < na; ++a) {
      std::size_t base = 0;
      if (axis == 0) base = g.linear(0, a, b);
      if (axis == 1) base = g.linear(a, 0, b);
      if (axis == 2) base = g.linear(a, b, 0);
      fn(base);
    }
  }
}

std::size_t axis_stride(const Grid& g, int axis) {
  if (axis == 0) return 1u;
  if (axis == 1) return static_cast<std::size_t>(g.dims[0]);
  return static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1]);
}

// 1-D convolution along one axis with zero padding outside the grid.
void convolve_axis(std::vector<double>& field, const Grid& g, int axis,
                   const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> out(field.size(), 0.0);
  const std::size_t stride = axis_stride(g, axis);
  const int len = g.dims[axis];
  for_each_line(g, axis, [&](std::size_t base) {
    for (int p = 0; p < len; ++p) {
      double acc = 0.0;
      const int t0 = std::max(-radius, -p);
      const int t1 = std::min(radius, len - 1 - p);
      const std::size_t center = base + static_cast<std::size_t>(p) * stride;
      for (int t = t0; t <= t1; ++t) {
        acc += kernel[t + radius] * field[center + static_cast<std::size_t>(t) * stride];
      }
      out[center] = acc;
    }
  });
  field.swap(out);
}

} // namespace

ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma_mm) {
  if (!(sigma_mm > 0.0)) throw InputError("gaussian_smooth: sigma must be positive");
  const std::size_t n = vol.grid.voxel_count();
  std::vector<double> numer(n), denom(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double m = vol.brain_mask[v] ? 1.0 : 0.0;
    numer[v] = m * vol.data[v];
    denom[v] = m;
  }
  for (int axis = 0; axis < 3; ++axis) {
    const std::vector<double> kernel = gaussian_kernel(sigma_mm / vol.grid.spacing[axis]);
    convolve_axis(numer, vol.grid, axis, kernel);
    convolve_axis(denom, vol.grid, axis, kernel);
  }
  ScalarVolume out = vol;
  for (std::size_t v = 0; v < n; ++v) {
    if (vol.brain_mask[v] && denom[v] > 1e-300) {
      out.data[v] = numer[v] / denom[v];
    }
    // outside the mask the input value is kept
  }
  return out;
}

// ---------------------------------------------------------------------------
// connected_components
// ---------------------------------------------------------------------------

LabelVolume connected_components(const LabelVolume& mask, Connectivity conn) {
  if (!mask.is_binary()) throw InputError("connected_components: mask must be binary");
  const Grid& g = mask.grid;

  std::vector<std::array<int, 3>> offsets;
  for (int dk = -1; dk <= 1; ++dk) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const int manhattan = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (conn == Connectivity::Six && manhattan != 1) continue;
        offsets.push_back({di, dj, dk});
      }
    }
  }

  LabelVolume out = LabelVolume::zeros(g);
  std::vector<std::int32_t> provisional(g.voxel_count(), 0);
  struct Comp {
    std::size_t size = 0;
    std::size_t first = 0;
    std::int32_t id = 0;
  };
  std::vector<Comp> comps;
  std::vector<std::size_t> stack;

  for (std::size_t seed = 0; seed < mask.labels.size(); ++seed) {
    if (!mask.labels[seed] || provisional[seed]) continue;
    const std::int32_t id = static_cast<std::int32_t>(comps.size()) + 1;
    Comp c;
    c.first = seed; // scan order guarantees this is the smallest linear index
    c.id = id;
    provisional[seed] = id;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++c.size;
      const VoxelIndex p = g.index_of(cur);
      for (const auto& o : offsets) {
        const int ni = p.i + o[0], nj = p.j + o[1], nk = p.k + o[2];
        if (!g.in_bounds(ni, nj, nk)) continue;
        const std::size_t nl = g.linear(ni, nj, nk);
        if (mask.labels[nl] && !provisional[nl]) {
          provisional[nl] = id;
          stack.push_back(nl);
        }
      }
    }
    comps.push_back(c);
  }

  // relabel by decreasing size, ties by smallest first-voxel linear index
  std::vector<std::size_t> order(comps.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
    return comps[a].first < comps[b].first;
  });
  std::vector<std::int32_t> remap(comps.size() + 1, 0);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    remap[static_cast<std::size_t>(comps[order[rank]].id)] = static_cast<std::int32_t>(rank) + 1;
  }
  for (std::size_t v = 0; v < provisional.size(); ++v) {
    if (provisional[v]) out.labels[v] = remap[static_cast<std::size_t>(provisional[v])];
  }
  return out;
}

std::vector<std::size_t> component_sizes(const LabelVolume& components) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(components.max_label()) + 1, 0);
  for (std::int32_t l : components.labels) sizes[static_cast<std::size_t>(l)]++;
  return sizes;
}

// ---------------------------------------------------------------------------
// morphology via exact Euclidean distance transforms
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher 1-D squared distance transform with physical
// sample spacing s; f is both input (seed costs) and output.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z, int n, double s) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == kInf) continue;
    if (f[static_cast<std::size_t>(v[0])] == kInf && k == 0) {
      v[0] = q;
      continue;
    }
    const double xq = q * s;
    while (true) {
      const double xp = v[k] * s;
      const double sep =
          (f[static_cast<std::size_t>(q)] + xq * xq - f[static_cast<std::size_t>(v[k])] - xp * xp) /
          (2.0 * (xq - xp));
      if (sep <= z[k]) {
        --k;
        if (k < 0) {
          k = 0;
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          break;
        }
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = sep;
      z[k + 1] = kInf;
      break;
    }
  }
  int idx = 0;
  for (int q = 0; q < n; ++q) {
    const double xq = q * s;
    while (z[idx + 1] < xq) ++idx;
    const double xp = v[idx] * s;
    const double df = xq - xp;
    d[static_cast<std::size_t>(q)] = df * df + f[static_cast<std::size_t>(v[idx])];
  }
  for (int q = 0; q < n; ++q) f[static_cast<std::size_t>(q)] = d[static_cast<std::size_t>(q)];
}

void edt_axis(std::vector<double>& field, const Grid& g, int axis) {
  const int len = g.dims[axis];
  const double s = g.spacing[axis];
  const std::size_t stride = axis_stride(g, axis);
  std::vector<double> line(static_cast<std::size_t>(len));
  std::vector<double> d(static_cast<std::size_t>(len));
  std::vector<int> v(static_cast<std::size_t>(len));
  std::vector<double> z(static_cast<std::size_t>(len) + 1);
  for_each_line(g, axis, [&](std::size_t base) {
    bool any = false;
    for (int p = 0; p < len; ++p) {
      line[static_cast<std::size_t>(p)] = field[base + static_cast<std::size_t>(p) * stride];
      if (line[static_cast<std::size_t>(p)] != kInf) any = true;
    }
    if (!any) return;
    edt_1d(line, d, v, z, len, s);
    for (int p = 0; p < len; ++p) {
      field[base + static_cast<std::size_t>(p) * stride] = line[static_cast<std::size_t>(p)];
    }
  });
}

// squared distance to the nearest voxel where seed(v) is true
std::vector<double> edt_squared(const Grid& g, const std::vector<std::uint8_t>& seed) {
  std::vector<double> field(g.voxel_count());
  for (std::size_t v = 0; v < field.size(); ++v) field[v] = seed[v] ? 0.0 : kInf;
  for (int axis = 0; axis < 3; ++axis) edt_axis(field, g, axis);
  return field;
}

// squared distance from each in-grid voxel center to the nearest out-of-grid
// voxel center (erosion treats out-of-grid as background)
double border_sq_distance(const Grid& g, const VoxelIndex& p) {
  double best = kInf;
  for (int a = 0; a < 3; ++a) {
    const int idx = (a == 0) ? p.i : (a == 1) ? p.j : p.k;
    const double lo = (idx + 1) * g.spacing[a];
    const double hi = (g.dims[a] - idx) * g.spacing[a];
    best = std::min(best, std::min(lo * lo, hi * hi));
  }
  return best;
}

} // namespace

std::vector<double> squared_distance_to(const LabelVolume& seeds) {
  std::vector<std::uint8_t> seed(seeds.labels.size());
  for (std::size_t v = 0; v < seed.size(); ++v) seed[v] = seeds.labels[v] != 0 ? 1 : 0;
  return edt_squared(seeds.grid, seed);
}

namespace {

LabelVolume dilate_ball(const LabelVolume& mask, double radius_mm) {
  std::vector<std::uint8_t> seed(mask.labels.size());
  for (std::size_t v = 0; v < seed.size(); ++v) seed[v] = mask.labels[v] != 0 ? 1 : 0;
  const std::vector<double> d2 = edt_squared(mask.grid, seed);
  const double r2 = radius_mm * radius_mm * (1.0 + 1e-12);
  LabelVolume out = LabelVolume::zeros(mask.grid);
  for (std::size_t v = 0; v < out.labels.size(); ++v) out.labels[v] = d2[v] <= r2 ? 1 : 0;
  return out;
}

LabelVolume erode_ball(const LabelVolume& mask, double radius_mm) {
  std::vector<std::uint8_t> bg(mask.labels.size());
  for (std::size_t v = 0; v < bg.size(); ++v) bg[v] = mask.labels[v] == 0 ? 1 : 0;
  const std::vector<double> d2 = edt_squared(mask.grid, bg);
  const double r2 = radius_mm * radius_mm * (1.0 + 1e-12);
  LabelVolume out = LabelVolume::zeros(mask.grid);
  for (std::size_t v = 0; v < out.labels.size(); ++v) {
    if (!mask.labels[v]) continue;
    const double border = border_sq_distance(mask.grid, mask.grid.index_of(v));
    out.labels[v] = (std::min(d2[v], border) > r2) ? 1 : 0;
  }
  return out;
}

} // namespace

LabelVolume morphology(const LabelVolume& mask, MorphOp op, double radius_mm,
                       const std::vector<std::uint8_t>* clip_mask) {
  if (!mask.is_binary()) throw InputError("morphology: mask must be binary");
  if (!(radius_mm > 0.0)) throw InputError("morphology: radius must be positive");
  LabelVolume out;
  switch (op) {
  case MorphOp::Dilate: out = dilate_ball(mask, radius_mm); break;
  case MorphOp::Erode: out = erode_ball(mask, radius_mm); break;
  case MorphOp::Open: out = dilate_ball(erode_ball(mask, radius_mm), radius_mm); break;
  case MorphOp::Close: out = erode_ball(dilate_ball(mask, radius_mm), radius_mm); break;
  }
  if (clip_mask) {
    if (clip_mask->size() != out.labels.size())
      throw InputError("morphology: clip mask size mismatch");
    for (std::size_t v = 0; v < out.labels.size(); ++v) {
      if (!(*clip_mask)[v]) out.labels[v] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// masked_stats
// ---------------------------------------------------------------------------

MaskedStats masked_stats(const ScalarVolume& vol, const LabelVolume& mask) {
  if (vol.data.size() != mask.labels.size())
    throw InputError("masked_stats: volume / mask size mismatch");
  MaskedStats s;
  double sum = 0.0;
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    if (mask.labels[v] && vol.brain_mask[v]) {
      sum += vol.data[v];
      ++s.count;
    }
  }
  if (s.count == 0) throw InputError("masked_stats: empty mask");
  s.mean = sum / static_cast<double>(s.count);
  if (s.count == 1) return s; // std 0 by convention, count flags it
  double ss = 0.0;
  for (std::size_t v = 0; v < vol.data.size(); ++v) {
    if (mask.labels[v] && vol.brain_mask[v]) {
      const double d = vol.data[v] - s.mean;
      ss += d * d;
    }
  }
  s.std_dev = std::sqrt(ss / static_cast<double>(s.count - 1));
  return s;
}

} // namespace pbts
