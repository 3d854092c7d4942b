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

#include <array>
#include <cstddef>
#include <vector>

#include "hemoseg/volume.hpp"

namespace hemoseg::morph {

using Offset = std::array<int, 3>;

/// Set of voxel offsets; always contains the origin and is symmetric under negation.
class StructuringElement {
 public:
  /// All offsets with squared length <= r^2. Radius 0 is the single origin voxel.
  static StructuringElement ball(int radius);
  /// Origin plus its six face neighbours.
  static StructuringElement cross6();
  /// Full 3x3x3 cube.
  static StructuringElement cube26();
  /// Throws ConfigError unless the set contains the origin and is symmetric.
  static StructuringElement from_offsets(std::vector<Offset> offsets);

  const std::vector<Offset>& offsets() const { return offsets_; }
  std::size_t size() const { return offsets_.size(); }
  /// Largest absolute component over all offsets.
  int extent() const { return extent_; }

 private:
  explicit StructuringElement(std::vector<Offset> offsets);
  std::vector<Offset> offsets_;
  int extent_ = 0;
};

enum class Connectivity { k6 = 6, k26 = 26 };

Connectivity connectivity_from_int(int n);

// Binary operators. Any nonzero label is foreground, output labels are 0/1, and
// voxels outside the volume count as background.
LabelMask erode(const LabelMask& mask, const StructuringElement& se);
LabelMask dilate(const LabelMask& mask, const StructuringElement& se);
LabelMask close(const LabelMask& mask, const StructuringElement& se);
LabelMask open(const LabelMask& mask, const StructuringElement& se);

struct ComponentLabeling {
  /// Components numbered 1..K in descending size; size ties go to the component
  /// whose smallest linear index is lower.
  LabelMask labels;
  /// sizes[c - 1] is the voxel count of component c.
  std::vector<std::size_t> sizes;

  std::size_t count() const { return sizes.size(); }
};

ComponentLabeling connected_components(const LabelMask& mask,
                                       Connectivity conn = Connectivity::k26);

/// Binary mask of the largest component (empty for an empty mask).
LabelMask largest_component(const LabelMask& mask, Connectivity conn = Connectivity::k26);

}  // namespace hemoseg::morph
