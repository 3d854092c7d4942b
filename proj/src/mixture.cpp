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

#include "hemoseg/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "hemoseg/error.hpp"
#include "hemoseg/parallel.hpp"

namespace hemoseg::em {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

// Per-cluster constants needed by the E-step.
struct ClusterDensity {
  double log_weight = 0.0;
  double int_mean = 0.0;
  double int_inv_var = 1.0;
  double int_log_norm = 0.0;  // -0.5 log(2 pi var)
  bool gaussian_location = false;
  Eigen::Vector3d loc_mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d loc_precision = Eigen::Matrix3d::Identity();
  double loc_log_norm = 0.0;  // -1.5 log(2 pi) - 0.5 log det, or -log n_bv
};

std::vector<ClusterDensity> prepare(const MixtureState& state) {
  if (state.clusters.empty()) throw InvariantViolation("mixture has no healthy cluster");
  if (state.n_bv == 0) throw InvariantViolation("mixture has zero brain voxels");
  std::vector<ClusterDensity> out;
  out.reserve(state.size());
  for (const auto& c : state.clusters) {
    ClusterDensity d;
    d.log_weight = c.weight > 0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity();
    d.int_mean = c.intensity_mean;
    d.int_inv_var = 1.0 / c.intensity_var;
    d.int_log_norm = -0.5 * (kLog2Pi + std::log(c.intensity_var));
    if (c.kind == ClusterKind::kHealthy) {
      d.loc_log_norm = -std::log(static_cast<double>(state.n_bv));
    } else {
      Eigen::LLT<Eigen::Matrix3d> llt(c.location_cov);
      if (llt.info() != Eigen::Success) {
        throw InvariantViolation("location covariance is not positive definite");
      }
      d.gaussian_location = true;
      d.loc_mean = c.location_mean;
      d.loc_precision = llt.solve(Eigen::Matrix3d::Identity());
      const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      d.loc_log_norm = -1.5 * kLog2Pi - 0.5 * log_det;
    }
    out.push_back(d);
  }
  return out;
}

inline double log_joint(const ClusterDensity& d, double intensity, const Eigen::Vector3d& x) {
  const double di = intensity - d.int_mean;
  double lp = d.log_weight + d.int_log_norm - 0.5 * di * di * d.int_inv_var + d.loc_log_norm;
  if (d.gaussian_location) {
    const Eigen::Vector3d dx = x - d.loc_mean;
    lp -= 0.5 * dx.dot(d.loc_precision * dx);
  }
  return lp;
}

// Fills `log_p` for voxel i and returns log sum_c exp(log_p[c]).
inline double voxel_log_terms(const std::vector<ClusterDensity>& dens, double intensity,
                              const Eigen::Vector3d& x, double* log_p) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < dens.size(); ++c) {
    log_p[c] = log_joint(dens[c], intensity, x);
    peak = std::max(peak, log_p[c]);
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < dens.size(); ++c) sum += std::exp(log_p[c] - peak);
  return peak + std::log(sum);
}

Eigen::Matrix3d floor_covariance(const Eigen::Matrix3d& cov, double floor) {
  const Eigen::Matrix3d sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sym);
  Eigen::Vector3d ev = eig.eigenvalues();
  for (int n = 0; n < 3; ++n) ev[n] = std::max(ev[n], floor);
  Eigen::Matrix3d out = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

void add_into(std::vector<double>& total, const std::vector<double>& part) {
  for (std::size_t n = 0; n < total.size(); ++n) total[n] += part[n];
}

}  // namespace

void EmConfig::validate() const {
  if (!(healthy_seed_hu < hemorrhage_seed_hu)) {
    throw ConfigError("healthy_seed_hu must be below hemorrhage_seed_hu");
  }
  if (min_region_voxels == 0) throw ConfigError("min_region_voxels must be positive");
  if (max_em_iters <= 0) throw ConfigError("max_em_iters must be positive");
  if (!(rel_ll_tol > 0)) throw ConfigError("rel_ll_tol must be positive");
  if (!(var_floor > 0) || !(cov_floor > 0)) throw ConfigError("variance floors must be positive");
  if (max_clusters < 1) throw ConfigError("max_clusters must be at least 1");
  if (!(prune_below >= 0)) throw ConfigError("prune_below must be non-negative");
}

BrainVoxels BrainVoxels::from(const BrainExtract& brain, bool physical_coords) {
  BrainVoxels out;
  out.dims = brain.brain_mask.dims();
  const Spacing sp = brain.volume.spacing();
  out.index.reserve(brain.n_bv);
  out.intensity.reserve(brain.n_bv);
  out.coord.reserve(brain.n_bv);
  for (std::size_t n = 0; n < brain.brain_mask.size(); ++n) {
    if (brain.brain_mask[n] == 0) continue;
    const VoxelCoord c = coord_of(n, out.dims);
    out.index.push_back(n);
    out.intensity.push_back(brain.volume[n]);
    if (physical_coords) {
      out.coord.emplace_back(c.i * sp.sx, c.j * sp.sy, c.k * sp.sz);
    } else {
      out.coord.emplace_back(static_cast<double>(c.i), static_cast<double>(c.j),
                             static_cast<double>(c.k));
    }
  }
  return out;
}

Responsibilities Responsibilities::with_extra_clusters(std::size_t extra) const {
  Responsibilities out(n_voxels_, n_clusters_ + extra);
  for (std::size_t i = 0; i < n_voxels_; ++i) {
    for (std::size_t c = 0; c < n_clusters_; ++c) out(i, c) = (*this)(i, c);
  }
  return out;
}

double Responsibilities::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_voxels_; ++i) {
    double s = 0.0;
    for (double g : row(i)) s += g;
    worst = std::max(worst, std::fabs(s - 1.0));
  }
  return worst;
}

EStepResult e_step(const BrainVoxels& voxels, const MixtureState& state) {
  const auto dens = prepare(state);
  const std::size_t k = dens.size();
  EStepResult out{Responsibilities(voxels.size(), k), 0.0};
  Responsibilities& resp = out.resp;
  out.log_likelihood = blocked_reduce(
      voxels.size(), 0.0,
      [&](std::size_t begin, std::size_t end, double& acc) {
        std::vector<double> log_p(k);
        for (std::size_t i = begin; i < end; ++i) {
          const double lse = voxel_log_terms(dens, voxels.intensity[i], voxels.coord[i], log_p.data());
          auto row = resp.row(i);
          for (std::size_t c = 0; c < k; ++c) row[c] = std::exp(log_p[c] - lse);
          acc += lse;
        }
      },
      [](double& total, double part) { total += part; });
  return out;
}

double log_likelihood(const BrainVoxels& voxels, const MixtureState& state) {
  const auto dens = prepare(state);
  const std::size_t k = dens.size();
  return blocked_reduce(
      voxels.size(), 0.0,
      [&](std::size_t begin, std::size_t end, double& acc) {
        std::vector<double> log_p(k);
        for (std::size_t i = begin; i < end; ++i) {
          acc += voxel_log_terms(dens, voxels.intensity[i], voxels.coord[i], log_p.data());
        }
      },
      [](double& total, double part) { total += part; });
}

MixtureState m_step(const BrainVoxels& voxels, const Responsibilities& resp, const EmConfig& cfg) {
  const std::size_t k = resp.clusters();
  const std::size_t n = voxels.size();
  if (k == 0) throw InvariantViolation("m_step needs at least the healthy cluster");
  if (resp.voxels() != n) throw InvariantViolation("responsibilities do not match voxel count");

  // Pass 1: N_c, sum gamma*int, sum gamma*x.
  constexpr std::size_t kFirst = 5;
  const std::vector<double> first = blocked_reduce(
      n, std::vector<double>(k * kFirst, 0.0),
      [&](std::size_t begin, std::size_t end, std::vector<double>& acc) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto row = resp.row(i);
          const double v = voxels.intensity[i];
          const Eigen::Vector3d& x = voxels.coord[i];
          for (std::size_t c = 0; c < k; ++c) {
            const double g = row[c];
            double* a = acc.data() + c * kFirst;
            a[0] += g;
            a[1] += g * v;
            a[2] += g * x[0];
            a[3] += g * x[1];
            a[4] += g * x[2];
          }
        }
      },
      add_into);

  std::vector<double> mean_int(k, 0.0);
  std::vector<Eigen::Vector3d> mean_loc(k, Eigen::Vector3d::Zero());
  for (std::size_t c = 0; c < k; ++c) {
    const double* a = first.data() + c * kFirst;
    if (a[0] > 0) {
      mean_int[c] = a[1] / a[0];
      mean_loc[c] = Eigen::Vector3d(a[2], a[3], a[4]) / a[0];
    }
  }

  // Pass 2: centered second moments.
  constexpr std::size_t kSecond = 7;
  const std::vector<double> second = blocked_reduce(
      n, std::vector<double>(k * kSecond, 0.0),
      [&](std::size_t begin, std::size_t end, std::vector<double>& acc) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto row = resp.row(i);
          for (std::size_t c = 0; c < k; ++c) {
            const double g = row[c];
            if (g == 0.0) continue;
            double* a = acc.data() + c * kSecond;
            const double di = voxels.intensity[i] - mean_int[c];
            const Eigen::Vector3d dx = voxels.coord[i] - mean_loc[c];
            a[0] += g * di * di;
            a[1] += g * dx[0] * dx[0];
            a[2] += g * dx[1] * dx[1];
            a[3] += g * dx[2] * dx[2];
            a[4] += g * dx[0] * dx[1];
            a[5] += g * dx[0] * dx[2];
            a[6] += g * dx[1] * dx[2];
          }
        }
      },
      add_into);

  MixtureState state;
  state.n_bv = n;
  double kept_mass = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double nc = first[c * kFirst];
    const bool healthy = c == 0;
    if (!healthy && nc < cfg.prune_below) continue;
    const double* a = second.data() + c * kSecond;
    ClusterParams p;
    p.kind = healthy ? ClusterKind::kHealthy : ClusterKind::kHemorrhage;
    p.effective_count = nc;
    if (nc > 0) {
      p.intensity_mean = mean_int[c];
      p.intensity_var = std::max(a[0] / nc, cfg.var_floor);
    } else {
      p.intensity_var = cfg.var_floor;
    }
    if (!healthy) {
      p.location_mean = mean_loc[c];
      Eigen::Matrix3d cov;
      cov << a[1], a[4], a[5],
             a[4], a[2], a[6],
             a[5], a[6], a[3];
      p.location_cov = floor_covariance(cov / nc, cfg.cov_floor);
    }
    kept_mass += nc;
    state.clusters.push_back(p);
  }
  // pi_c = N_c / n_bv; dividing by the retained mass also renormalizes after pruning.
  for (auto& p : state.clusters) {
    p.weight = kept_mass > 0 ? p.effective_count / kept_mass : (p.kind == ClusterKind::kHealthy);
  }
  return state;
}

InitResult init_state(const BrainExtract& brain, const BrainVoxels& voxels, const EmConfig& cfg) {
  cfg.validate();
  if (voxels.size() == 0) throw DataError("no brain voxels to fit");

  LabelMask candidates(brain.brain_mask.dims());
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    if (voxels.intensity[i] > cfg.hemorrhage_seed_hu) candidates[voxels.index[i]] = 1;
  }
  const auto cc = morph::connected_components(candidates, cfg.connectivity);
  const bool seeded = cc.count() > 0 && cc.sizes[0] >= cfg.min_region_voxels && cfg.max_clusters >= 2;

  const std::size_t k = seeded ? 2 : 1;
  Responsibilities seeds(voxels.size(), k);
  // Initial statistics come from the certain voxels only; uncertain rows carry a
  // uniform split but no weight in the first M-step.
  Responsibilities certain(voxels.size(), k);
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const double v = voxels.intensity[i];
    if (seeded && cc.labels[voxels.index[i]] == 1) {
      seeds(i, 1) = certain(i, 1) = 1.0;
    } else if (v < cfg.healthy_seed_hu) {
      seeds(i, 0) = certain(i, 0) = 1.0;
    } else {
      // Ambiguous band, or a bright voxel outside the seed region.
      for (std::size_t c = 0; c < k; ++c) seeds(i, c) = 1.0 / static_cast<double>(k);
    }
  }
  MixtureState state = m_step(voxels, certain, cfg);
  return {std::move(state), std::move(seeds)};
}

EmRun run_em(const BrainVoxels& voxels, MixtureState state, const EmConfig& cfg,
             const IterationObserver& observer) {
  EStepResult e = e_step(voxels, state);
  state.log_likelihood = e.log_likelihood;
  state.iteration = 0;
  state.converged = false;
  if (observer) observer({0, e.log_likelihood, &state, &e.resp, false});

  double previous = e.log_likelihood;
  int it = 0;
  while (it < cfg.max_em_iters) {
    ++it;
    MixtureState next = m_step(voxels, e.resp, cfg);
    const bool pruned = next.size() != state.size();
    e = e_step(voxels, next);
    next.log_likelihood = e.log_likelihood;
    next.iteration = it;
    state = std::move(next);
    if (observer) observer({it, e.log_likelihood, &state, &e.resp, pruned});
    const double gain = (e.log_likelihood - previous) / std::max(std::fabs(previous), 1e-300);
    previous = e.log_likelihood;
    if (!pruned && gain < cfg.rel_ll_tol) {
      state.converged = true;
      break;
    }
  }
  return {std::move(state), std::move(e.resp), it};
}

std::vector<std::uint8_t> hemorrhage_votes(const Responsibilities& resp) {
  std::vector<std::uint8_t> out(resp.voxels(), 0);
  for (std::size_t i = 0; i < resp.voxels(); ++i) {
    const auto row = resp.row(i);
    double bleed = 0.0;
    for (std::size_t c = 1; c < row.size(); ++c) bleed += row[c];
    out[i] = bleed > row[0] ? 1 : 0;
  }
  return out;
}

GrowResult grow_clusters(const BrainExtract& brain, const BrainVoxels& voxels,
                         const MixtureState& state, const Responsibilities& resp,
                         const EmConfig& cfg) {
  if (resp.clusters() != state.size() || resp.voxels() != voxels.size()) {
    throw InvariantViolation("responsibilities do not match the mixture state");
  }
  const auto votes = hemorrhage_votes(resp);
  LabelMask candidates(brain.brain_mask.dims());
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    if (votes[i] == 0 && voxels.intensity[i] > cfg.hemorrhage_seed_hu) {
      candidates[voxels.index[i]] = 1;
    }
  }
  const auto cc = morph::connected_components(candidates, cfg.connectivity);
  std::size_t large = 0;
  while (large < cc.count() && cc.sizes[large] >= cfg.min_region_voxels) ++large;

  GrowResult out;
  const std::size_t room = cfg.max_clusters > state.size() ? cfg.max_clusters - state.size() : 0;
  out.added = std::min(large, room);
  if (large > out.added) {
    out.warning = "max_clusters reached: " + std::to_string(large - out.added) +
                  " high-intensity region(s) left without a cluster";
  }
  if (out.added == 0) {
    out.state = state;
    out.resp = resp;
    return out;
  }

  // Warm start: existing memberships kept, new regions hard-assigned.
  out.resp = resp.with_extra_clusters(out.added);
  const std::size_t first_new = state.size();
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const auto label = cc.labels[voxels.index[i]];
    if (label == 0 || label > out.added) continue;
    auto row = out.resp.row(i);
    std::fill(row.begin(), row.end(), 0.0);
    row[first_new + label - 1] = 1.0;
  }
  out.state = m_step(voxels, out.resp, cfg);
  out.changed = true;
  return out;
}

FitResult fit(const BrainExtract& brain, const EmConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  FitResult out;
  out.voxels = BrainVoxels::from(brain, cfg.physical_coords);
  InitResult init = init_state(brain, out.voxels, cfg);

  if (init.state.hemorrhage_count() == 0) {
    out.no_hemorrhage_found = true;
    EStepResult e = e_step(out.voxels, init.state);
    init.state.log_likelihood = e.log_likelihood;
    init.state.converged = true;
    out.state = std::move(init.state);
    out.resp = std::move(e.resp);
    return out;
  }

  MixtureState state = std::move(init.state);
  // Each pass adds at least one cluster, so max_clusters bounds the loop.
  const int max_passes = static_cast<int>(cfg.max_clusters) + 1;
  for (int pass = 0;; ++pass) {
    EmRun run = run_em(out.voxels, std::move(state), cfg, observer);
    out.total_iterations += run.iterations;
    GrowResult grown = grow_clusters(brain, out.voxels, run.state, run.resp, cfg);
    if (grown.warning) out.warnings.push_back(*grown.warning);
    if (!grown.changed || pass + 1 >= max_passes) {
      if (grown.changed) out.warnings.push_back("cluster growth stopped after pass limit");
      out.state = std::move(run.state);
      out.resp = std::move(run.resp);
      break;
    }
    ++out.grow_passes;
    state = std::move(grown.state);
  }
  return out;
}

std::string format_report(const MixtureState& state) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf), "# clusters=%zu n_bv=%zu log_likelihood=%.6f iterations=%d converged=%d\n",
                state.size(), state.n_bv, state.log_likelihood, state.iteration,
                state.converged ? 1 : 0);
  out += buf;
  out += "# id kind weight int_mean int_std loc_x loc_y loc_z cov_eig0 cov_eig1 cov_eig2\n";
  for (std::size_t c = 0; c < state.size(); ++c) {
    const auto& p = state.clusters[c];
    if (p.kind == ClusterKind::kHealthy) {
      std::snprintf(buf, sizeof(buf), "%zu healthy %.6f %.4f %.4f - - - - - -\n", c, p.weight,
                    p.intensity_mean, std::sqrt(p.intensity_var));
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(p.location_cov);
      const Eigen::Vector3d ev = eig.eigenvalues();
      std::snprintf(buf, sizeof(buf), "%zu hemorrhage %.6f %.4f %.4f %.4f %.4f %.4f %.4f %.4f %.4f\n",
                    c, p.weight, p.intensity_mean, std::sqrt(p.intensity_var), p.location_mean[0],
                    p.location_mean[1], p.location_mean[2], ev[0], ev[1], ev[2]);
    }
    out += buf;
  }
  return out;
}

void check_state(const MixtureState& state, const EmConfig& cfg) {
  if (state.clusters.empty() || state.clusters[0].kind != ClusterKind::kHealthy) {
    throw InvariantViolation("cluster 0 must be the healthy cluster");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < state.size(); ++c) {
    const auto& p = state.clusters[c];
    if (c > 0 && p.kind != ClusterKind::kHemorrhage) {
      throw InvariantViolation("only cluster 0 may be healthy");
    }
    if (!(p.weight >= 0.0 && p.weight <= 1.0)) throw InvariantViolation("weight outside [0,1]");
    if (!(p.intensity_var >= cfg.var_floor * (1 - 1e-12))) {
      throw InvariantViolation("intensity variance below floor");
    }
    if (p.kind == ClusterKind::kHemorrhage) {
      if (!p.location_cov.isApprox(p.location_cov.transpose(), 1e-12)) {
        throw InvariantViolation("location covariance not symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(p.location_cov);
      if (eig.eigenvalues().minCoeff() < cfg.cov_floor * (1 - 1e-6)) {
        throw InvariantViolation("location covariance eigenvalue below floor");
      }
    }
    total += p.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw InvariantViolation("weights do not sum to 1");
}

}  // namespace hemoseg::em
