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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hemoseg {

/// Voxel counts along x, y and z.
struct Dims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;

  std::size_t count() const { return nx * ny * nz; }
  bool operator==(const Dims&) const = default;
};

/// Millimeters per voxel along each axis.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  bool operator==(const Spacing&) const = default;
};

struct VoxelCoord {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  bool operator==(const VoxelCoord&) const = default;
};

// Linearization is x fastest, then y, then z (same as NIfTI-1).
std::size_t index_of(const VoxelCoord& c, const Dims& dims);
VoxelCoord coord_of(std::size_t idx, const Dims& dims);

inline bool in_bounds(long i, long j, long k, const Dims& d) {
  return i >= 0 && j >= 0 && k >= 0 && static_cast<std::size_t>(i) < d.nx &&
         static_cast<std::size_t>(j) < d.ny && static_cast<std::size_t>(k) < d.nz;
}

std::array<double, 3> physical_coord(const VoxelCoord& c, const Spacing& s);

/// Dense scalar field of Hounsfield Units.
class Volume3D {
 public:
  Volume3D() = default;
  Volume3D(Dims dims, Spacing spacing, float fill = 0.0f);
  Volume3D(Dims dims, Spacing spacing, std::vector<float> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }

  float operator[](std::size_t idx) const { return data_[idx]; }
  float& operator[](std::size_t idx) { return data_[idx]; }
  float at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[i + dims_.nx * (j + dims_.ny * k)];
  }
  float& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[i + dims_.nx * (j + dims_.ny * k)];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const Volume3D&) const = default;

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<float> data_;
};

/// Dense per-voxel labels. Label 0 always means "not in the class of interest".
class LabelMask {
 public:
  using Label = std::uint32_t;

  LabelMask() = default;
  explicit LabelMask(Dims dims, Label fill = 0);
  LabelMask(Dims dims, std::vector<Label> labels);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return labels_.size(); }

  Label operator[](std::size_t idx) const { return labels_[idx]; }
  Label& operator[](std::size_t idx) { return labels_[idx]; }
  Label at(std::size_t i, std::size_t j, std::size_t k) const {
    return labels_[i + dims_.nx * (j + dims_.ny * k)];
  }
  Label& at(std::size_t i, std::size_t j, std::size_t k) {
    return labels_[i + dims_.nx * (j + dims_.ny * k)];
  }

  std::span<const Label> labels() const { return labels_; }
  std::span<Label> labels() { return labels_; }

  Label max_label() const;

  bool operator==(const LabelMask&) const = default;

 private:
  Dims dims_;
  std::vector<Label> labels_;
};

std::size_t count_nonzero(const LabelMask& mask);

/// Voxelwise set operations on the nonzero support; results are binary.
LabelMask mask_and(const LabelMask& a, const LabelMask& b);
LabelMask mask_or(const LabelMask& a, const LabelMask& b);
LabelMask mask_not(const LabelMask& a);
/// Binary mask of voxels where `a` is nonzero.
LabelMask binarize(const LabelMask& a);
/// True when every nonzero voxel of `a` is nonzero in `b`.
bool is_subset(const LabelMask& a, const LabelMask& b);

/// Axis-aligned per-slice rectangle, inclusive corners.
struct BoundingBox {
  std::size_t slice_index = 0;
  std::size_t x_min = 0;
  std::size_t y_min = 0;
  std::size_t x_max = 0;
  std::size_t y_max = 0;
  std::string type = "unknown";

  std::size_t area() const { return (x_max - x_min + 1) * (y_max - y_min + 1); }
  bool operator==(const BoundingBox&) const = default;
};

void validate_box(const BoundingBox& box, const Dims& dims);

}  // namespace hemoseg
