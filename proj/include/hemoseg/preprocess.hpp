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

#include <cstddef>

#include "hemoseg/morphology.hpp"
#include "hemoseg/volume.hpp"

namespace hemoseg {

/// Intensity window in HU; defaults cover brain tissue and blood.
struct WindowBounds {
  double i_min = 0.0;
  double i_max = 100.0;

  void validate() const;
};

struct PreprocessConfig {
  WindowBounds window;
  int skull_close_radius = 2;
  int brain_erode_radius = 1;
  morph::Connectivity connectivity = morph::Connectivity::k26;
  /// When false the edge erosion uses an in-plane disk instead of a ball.
  bool erode_3d = true;
};

/// Brain-only windowed volume.
struct BrainExtract {
  Volume3D volume;       ///< non-brain voxels hold i_min
  LabelMask brain_mask;  ///< 1 = brain
  std::size_t n_bv = 0;  ///< count_nonzero(brain_mask)
};

struct SkullStrip {
  Volume3D volume;         ///< removal mask voxels set to i_min
  LabelMask removal_mask;  ///< closed i_max seed
};

/// Clamps every intensity into [i_min, i_max].
Volume3D window(const Volume3D& vol, const WindowBounds& bounds);

/// Removes voxels at i_max (bone after windowing) plus gaps closed by `close_se`.
SkullStrip strip_skull(const Volume3D& windowed, const WindowBounds& bounds,
                       const morph::StructuringElement& close_se);

/// Keeps the largest component of voxels above i_min, then erodes its edge.
/// Throws DataError("no brain found") when nothing survives.
BrainExtract extract_brain(const Volume3D& stripped, const WindowBounds& bounds,
                           const morph::StructuringElement& erode_se,
                           morph::Connectivity conn);

/// window -> strip_skull -> extract_brain.
BrainExtract preprocess(const Volume3D& vol, const PreprocessConfig& cfg);

}  // namespace hemoseg
