/* Copyright 2026 The hemoseg Authors
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

#pragma once

#include "hemoseg/mixture.hpp"
#include "hemoseg/morphology.hpp"
#include "hemoseg/preprocess.hpp"

namespace hemoseg {

struct PostprocessConfig {
  int close_radius = 1;
};

struct SegmentationResult {
  LabelMask hemorrhage_mask;  ///< binary, inside the brain mask
  LabelMask cluster_map;      ///< argmax cluster id per brain voxel (0 = healthy/outside)
  em::MixtureState state;
};

/// Voxel is hemorrhage iff the summed hemorrhage responsibility strictly exceeds
/// the healthy one; exact ties stay healthy.
LabelMask hard_label(const em::Responsibilities& resp, const em::BrainVoxels& voxels);

/// Morphological closing.
LabelMask fill_holes(const LabelMask& mask, const morph::StructuringElement& se);

/// hard_label -> intersect brain -> fill_holes -> intersect brain.
SegmentationResult finalize(const em::Responsibilities& resp, const em::MixtureState& state,
                            const em::BrainVoxels& voxels, const BrainExtract& brain,
                            const PostprocessConfig& cfg = {});

}  // namespace hemoseg
