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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hemoseg/volume.hpp"

namespace hemoseg::phantom {

/// One hemorrhage blob: a Mahalanobis ball of `shape` around `center`, sized
/// either by `radius` or by a target voxel count.
struct BlobSpec {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Matrix3d shape = Eigen::Matrix3d::Identity();
  std::optional<double> radius;
  std::optional<std::size_t> voxels;
  double mean_hu = 75.0;
  double std_hu = 5.0;
  std::string type = "IPH";
};

struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{};
  std::optional<Eigen::Vector3d> brain_center;  ///< grid center when unset
  std::array<double, 3> brain_semi_axes{22.0, 25.0, 18.0};
  double brain_mean_hu = 32.0;
  double brain_std_hu = 4.0;
  double skull_thickness = 3.0;
  double skull_hu = 1000.0;
  double scalp_thickness = 2.0;
  double scalp_hu = 40.0;
  double air_hu = -1000.0;
  double noise_std_hu = 2.0;
  /// Radius of a fracture through the skull at the +x pole, filled with scalp tissue.
  double skull_gap_radius = 0.0;
  std::vector<BlobSpec> blobs;
  std::uint64_t seed = 1;

  Eigen::Vector3d center() const;
};

struct BlobTruth {
  Eigen::Vector3d location_mean;  ///< generating center
  Eigen::Matrix3d shape;
  double intensity_mean = 0.0;
  double intensity_std = 0.0;
  std::size_t voxel_count = 0;
  Eigen::Vector3d centroid;  ///< mean of the realized support
  std::string type;
};

struct PhantomOutput {
  Volume3D volume;
  LabelMask truth_mask;  ///< blob b carries label b + 1
  LabelMask brain_truth;
  LabelMask skull_truth;
  std::vector<BlobTruth> truth_params;
  std::vector<BoundingBox> boxes;
};

/// Deterministic in `spec` (including the seed) regardless of thread count.
/// Throws ConfigError for blobs leaving the brain or overlapping each other.
PhantomOutput generate(const PhantomSpec& spec);

/// One tight box per (3D component, slice). `types[label - 1]` tags a
/// component by the label of its first voxel when available.
std::vector<BoundingBox> boxes_from_truth(const LabelMask& truth,
                                          const std::vector<std::string>& types = {});

/// Key-value spec file; errors carry the offending line number.
PhantomSpec read_spec(const std::filesystem::path& path);
PhantomSpec parse_spec(const std::string& text, const std::string& source = "<spec>");
std::string format_spec(const PhantomSpec& spec);

/// Default spec: one 75 HU blob of ~800 voxels in a 32 HU brain.
PhantomSpec default_spec();

}  // namespace hemoseg::phantom
