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

#ifndef PBTS_VOLUME_HPP
#define PBTS_VOLUME_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace pbts {

struct VoxelIndex {
  int i = 0;
  int j = 0;
  int k = 0;
};

/// Regular 3-D voxel grid. Linear index order is i-fastest (NIfTI order).
struct Grid {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t linear(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  VoxelIndex index_of(std::size_t lin) const {
    const std::size_t nx = static_cast<std::size_t>(dims[0]);
    const std::size_t ny = static_cast<std::size_t>(dims[1]);
    VoxelIndex v;
    v.i = static_cast<int>(lin % nx);
    v.j = static_cast<int>((lin / nx) % ny);
    v.k = static_cast<int>(lin / (nx * ny));
    return v;
  }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }
  bool matches(const Grid& other, double spacing_tol = 1e-3) const;
  void validate() const; // throws InputError on non-positive dims/spacing
};

/// One 3-D intensity grid for a single MRI contrast plus the brain mask.
struct ScalarVolume {
  Grid grid;
  std::vector<double> data;
  std::vector<std::uint8_t> brain_mask; // 1 = inside brain

  static ScalarVolume filled(const Grid& g, double value = 0.0);

  double at(int i, int j, int k) const { return data[grid.linear(i, j, k)]; }
  double& at(int i, int j, int k) { return data[grid.linear(i, j, k)]; }
  bool inside(std::size_t lin) const { return brain_mask[lin] != 0; }
  std::size_t mask_count() const;

  /// Checks sizes, spacing positivity and finiteness inside the mask.
  void validate() const;
};

/// Integer-coded mask / label grid. 0 = background.
struct LabelVolume {
  Grid grid;
  std::vector<std::int32_t> labels;

  static LabelVolume zeros(const Grid& g);

  std::int32_t at(int i, int j, int k) const { return labels[grid.linear(i, j, k)]; }
  std::int32_t& at(int i, int j, int k) { return labels[grid.linear(i, j, k)]; }
  bool is_binary() const;
  std::size_t count_nonzero() const;
  std::int32_t max_label() const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Grid-level primitives
// ---------------------------------------------------------------------------

/// Voxel gets label 1 iff inside brain_mask and low <= value <= high.
/// A missing bound is unbounded; at least one bound must be given.
LabelVolume threshold_mask(const ScalarVolume& vol, std::optional<double> low,
                           std::optional<double> high);

/// Separable Gaussian filter in physical units (sigma in mm, divided by the
/// per-axis spacing). Mask-normalized: voxels outside brain_mask contribute
/// nothing and are returned unchanged, so masked-out values do not bleed in.
ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma_mm);

enum class Connectivity { Six = 6, TwentySix = 26 };

/// Labels each connected foreground component with a distinct positive id,
/// ordered by decreasing voxel count (label 1 = largest). Ties are broken by
/// the smallest linear index of the component's first voxel.
LabelVolume connected_components(const LabelVolume& mask, Connectivity conn);

/// Voxel count per component label; entry [0] is the background count.
std::vector<std::size_t> component_sizes(const LabelVolume& components);

enum class MorphOp { Dilate, Erode, Open, Close };

/// Binary morphology with a physical-radius ball structuring element
/// (rasterized on the anisotropic voxel grid). Out-of-grid voxels count as
/// background. When clip_mask is given, the result is intersected with it.
LabelVolume morphology(const LabelVolume& mask, MorphOp op, double radius_mm,
                       const std::vector<std::uint8_t>* clip_mask = nullptr);

struct MaskedStats {
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};

/// Sample mean / standard deviation (n-1 denominator) of vol over the mask's
/// nonzero voxels. Throws on an empty mask; count == 1 yields std_dev = 0.
MaskedStats masked_stats(const ScalarVolume& vol, const LabelVolume& mask);

/// Squared Euclidean distance (mm^2) from every voxel to the nearest seed
/// (labels > 0). Seeds get 0; a volume with no seeds gets +inf everywhere.
std::vector<double> squared_distance_to(const LabelVolume& seeds);

} // namespace pbts

#endif
