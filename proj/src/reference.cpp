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

#include "hemoseg/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hemoseg::reference {

em::EStepResult e_step(const em::BrainVoxels& voxels, const em::MixtureState& state) {
  const std::size_t k = state.size();
  em::EStepResult out{em::Responsibilities(voxels.size(), k), 0.0};
  std::vector<Eigen::Matrix3d> inv(k);
  std::vector<double> det(k, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    inv[c] = state.clusters[c].location_cov.inverse();
    det[c] = state.clusters[c].location_cov.determinant();
  }
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> lp(k);
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto& p = state.clusters[c];
      const double di = voxels.intensity[i] - p.intensity_mean;
      double v = std::log(p.weight) - 0.5 * std::log(two_pi * p.intensity_var) -
                 di * di / (2.0 * p.intensity_var);
      if (c == 0) {
        v -= std::log(static_cast<double>(state.n_bv));
      } else {
        const Eigen::Vector3d dx = voxels.coord[i] - p.location_mean;
        v += -0.5 * std::log(two_pi * two_pi * two_pi * det[c]) - 0.5 * dx.transpose() * inv[c] * dx;
      }
      lp[c] = v;
    }
    const double peak = *std::max_element(lp.begin(), lp.end());
    double sum = 0.0;
    for (double v : lp) sum += std::exp(v - peak);
    const double lse = peak + std::log(sum);
    for (std::size_t c = 0; c < k; ++c) out.resp(i, c) = std::exp(lp[c] - lse);
    out.log_likelihood += lse;
  }
  return out;
}

em::MixtureState m_step(const em::BrainVoxels& voxels, const em::Responsibilities& resp,
                        const em::EmConfig& cfg) {
  const std::size_t k = resp.clusters();
  em::MixtureState state;
  state.n_bv = voxels.size();
  double mass = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double nc = 0.0, si = 0.0;
    Eigen::Vector3d sx = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < voxels.size(); ++i) {
      nc += resp(i, c);
      si += resp(i, c) * voxels.intensity[i];
      sx += resp(i, c) * voxels.coord[i];
    }
    if (c > 0 && nc < cfg.prune_below) continue;
    em::ClusterParams p;
    p.kind = c == 0 ? em::ClusterKind::kHealthy : em::ClusterKind::kHemorrhage;
    p.effective_count = nc;
    p.intensity_mean = nc > 0 ? si / nc : 0.0;
    const Eigen::Vector3d mu = nc > 0 ? Eigen::Vector3d(sx / nc) : Eigen::Vector3d::Zero();
    double vi = 0.0;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < voxels.size(); ++i) {
      const double di = voxels.intensity[i] - p.intensity_mean;
      const Eigen::Vector3d dx = voxels.coord[i] - mu;
      vi += resp(i, c) * di * di;
      cov += resp(i, c) * dx * dx.transpose();
    }
    p.intensity_var = nc > 0 ? std::max(vi / nc, cfg.var_floor) : cfg.var_floor;
    if (c > 0) {
      p.location_mean = mu;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov / nc);
      const Eigen::Vector3d ev = eig.eigenvalues().cwiseMax(cfg.cov_floor);
      p.location_cov = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    }
    mass += nc;
    state.clusters.push_back(p);
  }
  for (auto& p : state.clusters) p.weight = p.effective_count / mass;
  return state;
}

namespace {

bool fg(const LabelMask& m, long x, long y, long z) {
  return in_bounds(x, y, z, m.dims()) &&
         m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) != 0;
}

}  // namespace

LabelMask erode(const LabelMask& mask, const morph::StructuringElement& se) {
  const Dims d = mask.dims();
  LabelMask out(d);
  for (std::size_t v = 0; v < mask.size(); ++v) {
    const VoxelCoord c = coord_of(v, d);
    bool all = true;
    for (const auto& o : se.offsets()) {
      all = all && fg(mask, static_cast<long>(c.i) + o[0], static_cast<long>(c.j) + o[1],
                      static_cast<long>(c.k) + o[2]);
    }
    out[v] = all;
  }
  return out;
}

LabelMask dilate(const LabelMask& mask, const morph::StructuringElement& se) {
  const Dims d = mask.dims();
  LabelMask out(d);
  for (std::size_t v = 0; v < mask.size(); ++v) {
    const VoxelCoord c = coord_of(v, d);
    bool any = false;
    for (const auto& o : se.offsets()) {
      // Minkowski sum: v is covered when v - o is foreground.
      any = any || fg(mask, static_cast<long>(c.i) - o[0], static_cast<long>(c.j) - o[1],
                      static_cast<long>(c.k) - o[2]);
    }
    out[v] = any;
  }
  return out;
}

}  // namespace hemoseg::reference
