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

#ifndef PBTS_NIFTI_HPP
#define PBTS_NIFTI_HPP

#include <array>
#include <string>

#include "pbts/volume.hpp"

namespace pbts {

/// Row-major 3x4 voxel-to-world affine (the sform rows).
using Affine = std::array<double, 12>;

/// Identity-orientation affine for the given spacing.
Affine default_affine(const Grid& grid);

bool affines_match(const Affine& a, const Affine& b, double tol = 1e-3);

/// Single-file NIfTI-1 writers. ".gz" suffix selects gzip compression with a
/// fixed (zero) header timestamp so identical volumes produce identical
/// bytes. Scalars are stored as float32, labels as the smallest of
/// uint8 / int16 / int32 that fits.
void write_nifti(const std::string& path, const ScalarVolume& vol);
void write_nifti(const std::string& path, const LabelVolume& vol);

/// Readers accept .nii and .nii.gz, little-endian, datatypes
/// uint8/int16/uint16/int32/float32/float64. scl_slope/scl_inter are applied.
/// The returned ScalarVolume has an all-true brain mask; callers decide
/// masking. The sform affine is returned through affine_out when non-null.
ScalarVolume read_scalar_nifti(const std::string& path, Affine* affine_out = nullptr);
LabelVolume read_label_nifti(const std::string& path, Affine* affine_out = nullptr);

} // namespace pbts

#endif
