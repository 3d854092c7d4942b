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

#include "hemoseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hemoseg/error.hpp"

namespace hemoseg {

std::size_t index_of(const VoxelCoord& c, const Dims& dims) {
  if (c.i >= dims.nx || c.j >= dims.ny || c.k >= dims.nz) {
    throw std::out_of_range("voxel coordinate out of bounds");
  }
  return c.i + dims.nx * (c.j + dims.ny * c.k);
}

VoxelCoord coord_of(std::size_t idx, const Dims& dims) {
  if (idx >= dims.count()) {
    throw std::out_of_range("linear index out of range");
  }
  const std::size_t plane = dims.nx * dims.ny;
  return {idx % dims.nx, (idx % plane) / dims.nx, idx / plane};
}

std::array<double, 3> physical_coord(const VoxelCoord& c, const Spacing& s) {
  return {static_cast<double>(c.i) * s.sx, static_cast<double>(c.j) * s.sy,
          static_cast<double>(c.k) * s.sz};
}

namespace {

void check_geometry(const Dims& dims, const Spacing& spacing) {
  if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
    throw DataError("volume dimensions must be positive");
  }
  for (double s : {spacing.sx, spacing.sy, spacing.sz}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DataError("voxel spacing must be positive and finite");
    }
  }
}

}  // namespace

Volume3D::Volume3D(Dims dims, Spacing spacing, float fill)
    : dims_(dims), spacing_(spacing) {
  check_geometry(dims_, spacing_);
  data_.assign(dims_.count(), fill);
}

Volume3D::Volume3D(Dims dims, Spacing spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_geometry(dims_, spacing_);
  if (data_.size() != dims_.count()) {
    throw DataError("volume payload has " + std::to_string(data_.size()) +
                    " values, dims require " + std::to_string(dims_.count()));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw DataError("volume contains non-finite intensity");
  }
}

LabelMask::LabelMask(Dims dims, Label fill) : dims_(dims), labels_(dims.count(), fill) {}

LabelMask::LabelMask(Dims dims, std::vector<Label> labels)
    : dims_(dims), labels_(std::move(labels)) {
  if (labels_.size() != dims_.count()) {
    throw DataError("mask payload length does not match dims");
  }
}

LabelMask::Label LabelMask::max_label() const {
  if (labels_.empty()) return 0;
  return *std::max_element(labels_.begin(), labels_.end());
}

std::size_t count_nonzero(const LabelMask& mask) {
  const auto labels = mask.labels();
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
}

namespace {

void require_same_dims(const LabelMask& a, const LabelMask& b) {
  if (!(a.dims() == b.dims())) throw DataError("mask dimensions differ");
}

}  // namespace

LabelMask mask_and(const LabelMask& a, const LabelMask& b) {
  require_same_dims(a, b);
  LabelMask out(a.dims());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = (a[n] != 0 && b[n] != 0) ? 1 : 0;
  return out;
}

LabelMask mask_or(const LabelMask& a, const LabelMask& b) {
  require_same_dims(a, b);
  LabelMask out(a.dims());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = (a[n] != 0 || b[n] != 0) ? 1 : 0;
  return out;
}

LabelMask mask_not(const LabelMask& a) {
  LabelMask out(a.dims());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] == 0 ? 1 : 0;
  return out;
}

LabelMask binarize(const LabelMask& a) {
  LabelMask out(a.dims());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] != 0 ? 1 : 0;
  return out;
}

bool is_subset(const LabelMask& a, const LabelMask& b) {
  require_same_dims(a, b);
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n] != 0 && b[n] == 0) return false;
  }
  return true;
}

void validate_box(const BoundingBox& box, const Dims& dims) {
  if (box.x_min > box.x_max || box.y_min > box.y_max) {
    throw DataError("bounding box has min corner above max corner");
  }
  if (box.x_max >= dims.nx || box.y_max >= dims.ny || box.slice_index >= dims.nz) {
    throw DataError("bounding box lies outside the volume");
  }
}

}  // namespace hemoseg
