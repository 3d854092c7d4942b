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
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hemoseg/volume.hpp"

namespace hemoseg::metrics {

/// 2|X n Y| / (|X| + |Y|). Both empty gives 1, exactly one empty gives 0.
double dice(const LabelMask& x, const LabelMask& y);

struct DetectionConfig {
  std::size_t min_overlap_voxels = 1;
  /// Half-open bins [edge_n, edge_n+1) over box area in voxels.
  std::vector<double> size_edges{0, 25, 100, 400, std::numeric_limits<double>::infinity()};
  /// Half-open bins over the maximum volume intensity inside the box (HU).
  std::vector<double> intensity_edges{-std::numeric_limits<double>::infinity(), 50, 60, 70, 80,
                                      std::numeric_limits<double>::infinity()};
};

struct BoxOutcome {
  BoundingBox box;
  std::size_t overlap = 0;  ///< predicted voxels inside the box
  bool detected = false;
  std::optional<double> max_intensity;  ///< only when a volume is supplied
};

struct RateBin {
  std::string label;
  std::size_t detected = 0;
  std::size_t total = 0;

  /// Empty bins have no rate.
  std::optional<double> rate() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(detected) / static_cast<double>(total);
  }
};

struct EvalReport {
  std::optional<double> dice;
  std::vector<BoxOutcome> boxes;
  RateBin overall{"all"};
  std::vector<RateBin> by_size;
  std::vector<RateBin> by_intensity;
  std::vector<RateBin> by_type;
};

/// A box is detected when at least min_overlap_voxels predicted voxels lie inside it.
EvalReport detection_rate(const LabelMask& pred, std::span<const BoundingBox> boxes,
                          const DetectionConfig& cfg = {}, const Volume3D* volume = nullptr);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  ///< population
};

/// Mean / max / population std; nullopt for an empty group.
std::optional<Summary> summarize(std::span<const double> values);

/// Line format `z_index x_min y_min x_max y_max type_tag`; `#` starts a comment.
std::vector<BoundingBox> read_boxes(const std::filesystem::path& path);
void write_boxes(const std::filesystem::path& path, std::span<const BoundingBox> boxes);

/// Human-readable table followed by `key=value` lines.
std::string format_report(const EvalReport& report);

}  // namespace hemoseg::metrics
