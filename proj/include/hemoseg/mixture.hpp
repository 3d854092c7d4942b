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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hemoseg/morphology.hpp"
#include "hemoseg/preprocess.hpp"
#include "hemoseg/volume.hpp"

namespace hemoseg::em {

struct EmConfig {
  double healthy_seed_hu = 40.0;     ///< voxels below start in the healthy cluster
  double hemorrhage_seed_hu = 50.0;  ///< voxels above may seed hemorrhage clusters
  std::size_t min_region_voxels = 100;
  int max_em_iters = 100;
  double rel_ll_tol = 1e-6;
  double var_floor = 1e-4;  ///< HU^2
  double cov_floor = 1e-4;  ///< voxel^2 (mm^2 with physical_coords)
  std::size_t max_clusters = 16;  ///< including the healthy cluster
  double prune_below = 1.0;       ///< effective voxel count under which a cluster is dropped
  morph::Connectivity connectivity = morph::Connectivity::k26;
  bool physical_coords = false;

  void validate() const;
};

enum class ClusterKind { kHealthy, kHemorrhage };

struct ClusterParams {
  ClusterKind kind = ClusterKind::kHemorrhage;
  double weight = 0.0;
  double intensity_mean = 0.0;
  double intensity_var = 1.0;
  // Hemorrhage clusters only; the healthy cluster has a uniform location density.
  Eigen::Vector3d location_mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d location_cov = Eigen::Matrix3d::Identity();
  double effective_count = 0.0;  ///< N_c from the last M-step
};

/// Cluster 0 is always healthy; clusters 1.. are hemorrhage.
struct MixtureState {
  std::vector<ClusterParams> clusters;
  std::size_t n_bv = 0;
  double log_likelihood = 0.0;
  int iteration = 0;
  bool converged = false;

  std::size_t size() const { return clusters.size(); }
  std::size_t hemorrhage_count() const { return clusters.empty() ? 0 : clusters.size() - 1; }
};

/// Brain voxels flattened for the mixture kernels.
struct BrainVoxels {
  Dims dims;
  std::vector<std::size_t> index;  ///< linear index into the volume
  std::vector<double> intensity;
  std::vector<Eigen::Vector3d> coord;

  std::size_t size() const { return index.size(); }
  static BrainVoxels from(const BrainExtract& brain, bool physical_coords = false);
};

/// Row-major n_voxels x n_clusters soft memberships.
class Responsibilities {
 public:
  Responsibilities() = default;
  Responsibilities(std::size_t n_voxels, std::size_t n_clusters)
      : n_voxels_(n_voxels), n_clusters_(n_clusters), gamma_(n_voxels * n_clusters, 0.0) {}

  std::size_t voxels() const { return n_voxels_; }
  std::size_t clusters() const { return n_clusters_; }
  double operator()(std::size_t i, std::size_t c) const { return gamma_[i * n_clusters_ + c]; }
  double& operator()(std::size_t i, std::size_t c) { return gamma_[i * n_clusters_ + c]; }
  std::span<const double> row(std::size_t i) const {
    return {gamma_.data() + i * n_clusters_, n_clusters_};
  }
  std::span<double> row(std::size_t i) { return {gamma_.data() + i * n_clusters_, n_clusters_}; }

  /// Copy with extra all-zero columns appended.
  Responsibilities with_extra_clusters(std::size_t extra) const;
  /// Largest |sum_c gamma_ic - 1| over voxels.
  double max_normalization_error() const;

 private:
  std::size_t n_voxels_ = 0;
  std::size_t n_clusters_ = 0;
  std::vector<double> gamma_;
};

struct EStepResult {
  Responsibilities resp;
  double log_likelihood = 0.0;
};

/// Posterior memberships under `state`, normalized with log-sum-exp.
EStepResult e_step(const BrainVoxels& voxels, const MixtureState& state);

/// sum_i log sum_c pi_c p(int_i | c) p(x_i | c).
double log_likelihood(const BrainVoxels& voxels, const MixtureState& state);

/// Weighted maximum-likelihood update with variance floors. Column 0 of `resp`
/// is healthy. Hemorrhage clusters with N_c below cfg.prune_below are dropped.
MixtureState m_step(const BrainVoxels& voxels, const Responsibilities& resp,
                    const EmConfig& cfg);

struct InitResult {
  MixtureState state;
  Responsibilities seeds;
};

/// Seeds below healthy_seed_hu as healthy and the largest region above
/// hemorrhage_seed_hu (if large enough) as one hemorrhage cluster; every other
/// voxel gets an even split. The initial parameters are one M-step over the
/// certain seeds.
InitResult init_state(const BrainExtract& brain, const BrainVoxels& voxels, const EmConfig& cfg);

struct IterationInfo {
  int iteration = 0;  ///< 0 = state passed in
  double log_likelihood = 0.0;
  const MixtureState* state = nullptr;
  const Responsibilities* resp = nullptr;
  bool pruned = false;  ///< the M-step leading here dropped a cluster
};

using IterationObserver = std::function<void(const IterationInfo&)>;

struct EmRun {
  MixtureState state;  ///< log_likelihood/iteration/converged filled in
  Responsibilities resp;
  int iterations = 0;
};

/// Alternates e_step / m_step until the relative log-likelihood gain drops
/// below rel_ll_tol or max_em_iters is reached.
EmRun run_em(const BrainVoxels& voxels, MixtureState state, const EmConfig& cfg,
             const IterationObserver& observer = {});

/// Hard label per brain voxel: 1 when the summed hemorrhage mass beats healthy.
std::vector<std::uint8_t> hemorrhage_votes(const Responsibilities& resp);

struct GrowResult {
  MixtureState state;
  Responsibilities resp;  ///< warm-started memberships that produced `state`
  bool changed = false;
  std::size_t added = 0;
  std::optional<std::string> warning;
};

/// Adds a hemorrhage cluster for each large high-intensity region not currently
/// labeled hemorrhage.
GrowResult grow_clusters(const BrainExtract& brain, const BrainVoxels& voxels,
                         const MixtureState& state, const Responsibilities& resp,
                         const EmConfig& cfg);

struct FitResult {
  MixtureState state;
  Responsibilities resp;
  BrainVoxels voxels;
  bool no_hemorrhage_found = false;  ///< initialization found no seed region
  int grow_passes = 0;
  int total_iterations = 0;
  std::vector<std::string> warnings;
};

/// init -> (run_em -> grow_clusters)* until no cluster is added.
FitResult fit(const BrainExtract& brain, const EmConfig& cfg,
              const IterationObserver& observer = {});

/// Cluster table: kind, weight, intensity mean/std, location mean, covariance eigenvalues.
std::string format_report(const MixtureState& state);

/// Throws InvariantViolation if weights, variances or covariances are invalid.
void check_state(const MixtureState& state, const EmConfig& cfg);

}  // namespace hemoseg::em
