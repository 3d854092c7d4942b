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
#include <span>
#include <vector>

#include "hemoseg/preprocess.hpp"
#include "hemoseg/volume.hpp"

namespace hemoseg::fcm {

struct FcmConfig {
  std::size_t n_clusters = 4;
  double fuzziness = 2.0;  ///< m
  double threshold_hu = 45.0;
  int max_iters = 100;
  double tol = 1e-5;  ///< stop when no center moves more than this (HU)
  int open_radius = 1;
  /// Fit on 0.5 HU histogram buckets instead of individual voxels.
  bool use_histogram = false;
  double histogram_bin = 0.5;
  /// Overrides the quantile initialization when non-empty (any order).
  std::vector<double> initial_centers;

  void validate() const;
};

struct FcmFit {
  std::vector<double> centers;      ///< ascending
  std::vector<double> memberships;  ///< n x K row-major, columns follow `centers`
  std::vector<double> objective;    ///< J after each membership update
  int iterations = 0;

  std::size_t clusters() const { return centers.size(); }
  double membership(std::size_t i, std::size_t k) const {
    return memberships[i * centers.size() + k];
  }
};

/// Standard fuzzy c-means alternating optimization on scalar intensities.
/// Throws DataError when there are fewer distinct values than clusters.
FcmFit fcm_fit(std::span<const double> values, const FcmConfig& cfg);

struct FcmSegmentation {
  LabelMask hemorrhage_mask;
  LabelMask cluster_map;  ///< 1 + argmax cluster, 0 outside brain
  FcmFit fit;
};

/// Labels clusters whose center exceeds `threshold_hu` and opens the result.
FcmSegmentation fcm_segment(const BrainExtract& brain, const FcmConfig& cfg);

/// Thresholding and opening for an existing fit over the brain voxels in index order.
LabelMask fcm_mask(const BrainExtract& brain, const FcmFit& fit, double threshold_hu,
                   int open_radius);

}  // namespace hemoseg::fcm
