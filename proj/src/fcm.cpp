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

#include "hemoseg/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hemoseg/error.hpp"
#include "hemoseg/morphology.hpp"
#include "hemoseg/parallel.hpp"

namespace hemoseg::fcm {

namespace {

// Weighted points: a voxel list, or histogram buckets (mean value, count).
struct Points {
  std::vector<double> value;
  std::vector<double> weight;
};

Points bucketize(std::span<const double> values, double bin) {
  std::map<long long, std::pair<double, double>> buckets;  // sum, count
  for (double v : values) {
    auto& b = buckets[static_cast<long long>(std::floor(v / bin))];
    b.first += v;
    b.second += 1.0;
  }
  Points p;
  for (const auto& [key, b] : buckets) {
    p.value.push_back(b.first / b.second);
    p.weight.push_back(b.second);
  }
  return p;
}

// Memberships of one value against `centers`.
void memberships_for(double x, const std::vector<double>& centers, double exponent, double* u) {
  const std::size_t k = centers.size();
  std::size_t zero_hits = 0;
  for (std::size_t c = 0; c < k; ++c) zero_hits += (x == centers[c]);
  if (zero_hits > 0) {
    for (std::size_t c = 0; c < k; ++c) u[c] = x == centers[c] ? 1.0 / zero_hits : 0.0;
    return;
  }
  // u_c = d_c^-e / sum_j d_j^-e with e = 2/(m-1), evaluated relative to the nearest center.
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) dmin = std::min(dmin, std::fabs(x - centers[c]));
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    u[c] = std::pow(dmin / std::fabs(x - centers[c]), exponent);
    total += u[c];
  }
  for (std::size_t c = 0; c < k; ++c) u[c] /= total;
}

std::vector<double> initial_centers(std::span<const double> values, const FcmConfig& cfg) {
  if (!cfg.initial_centers.empty()) {
    if (cfg.initial_centers.size() != cfg.n_clusters) {
      throw ConfigError("initial_centers must have n_clusters entries");
    }
    return cfg.initial_centers;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = cfg.n_clusters;
  std::vector<double> centers(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double q = (static_cast<double>(c) + 0.5) / static_cast<double>(k);
    const auto pos = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5);
    centers[c] = sorted[pos];
  }
  if (std::adjacent_find(centers.begin(), centers.end()) != centers.end()) {
    // Heavy ties: spread evenly over the value range instead.
    const double lo = sorted.front();
    const double hi = sorted.back();
    for (std::size_t c = 0; c < k; ++c) {
      centers[c] = lo + (static_cast<double>(c) + 0.5) / static_cast<double>(k) * (hi - lo);
    }
  }
  return centers;
}

}  // namespace

void FcmConfig::validate() const {
  if (n_clusters < 2) throw ConfigError("fcm n_clusters must be >= 2");
  if (!(fuzziness > 1.0)) throw ConfigError("fcm fuzziness must be > 1");
  if (max_iters <= 0) throw ConfigError("fcm max_iters must be positive");
  if (!(tol > 0)) throw ConfigError("fcm tol must be positive");
  if (open_radius < 0) throw ConfigError("fcm open_radius must be >= 0");
  if (!(histogram_bin > 0)) throw ConfigError("fcm histogram_bin must be positive");
}

FcmFit fcm_fit(std::span<const double> values, const FcmConfig& cfg) {
  cfg.validate();
  {
    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    const auto n_distinct = static_cast<std::size_t>(
        std::unique(distinct.begin(), distinct.end()) - distinct.begin());
    if (n_distinct < cfg.n_clusters) {
      throw DataError("fcm needs at least n_clusters distinct intensities");
    }
  }

  Points pts;
  if (cfg.use_histogram) {
    pts = bucketize(values, cfg.histogram_bin);
  } else {
    pts.value.assign(values.begin(), values.end());
    pts.weight.assign(values.size(), 1.0);
  }
  const std::size_t n = pts.value.size();
  const std::size_t k = cfg.n_clusters;
  const double m = cfg.fuzziness;
  const double exponent = 2.0 / (m - 1.0);

  std::vector<double> centers = initial_centers(values, cfg);
  std::sort(centers.begin(), centers.end());
  FcmFit out;
  std::vector<double> u(n * k);

  for (int it = 0; it < cfg.max_iters; ++it) {
    // Per cluster: sum w u^m x, sum w u^m, then objective.
    const std::vector<double> sums = blocked_reduce(
        n, std::vector<double>(2 * k + 1, 0.0),
        [&](std::size_t begin, std::size_t end, std::vector<double>& acc) {
          for (std::size_t i = begin; i < end; ++i) {
            double* ui = u.data() + i * k;
            memberships_for(pts.value[i], centers, exponent, ui);
            for (std::size_t c = 0; c < k; ++c) {
              const double um = std::pow(ui[c], m) * pts.weight[i];
              const double d = pts.value[i] - centers[c];
              acc[2 * c] += um * pts.value[i];
              acc[2 * c + 1] += um;
              acc[2 * k] += um * d * d;
            }
          }
        },
        [](std::vector<double>& total, const std::vector<double>& part) {
          for (std::size_t q = 0; q < total.size(); ++q) total[q] += part[q];
        });
    out.objective.push_back(sums[2 * k]);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (sums[2 * c + 1] <= 0) continue;
      const double next = sums[2 * c] / sums[2 * c + 1];
      shift = std::max(shift, std::fabs(next - centers[c]));
      centers[c] = next;
    }
    out.iterations = it + 1;
    if (shift < cfg.tol) break;
  }

  std::sort(centers.begin(), centers.end());
  out.centers = centers;
  // Final per-value memberships against the final centers.
  out.memberships.assign(values.size() * k, 0.0);
  const long nv = static_cast<long>(values.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nv; ++i) {
    memberships_for(values[i], centers, exponent, out.memberships.data() + i * k);
  }
  return out;
}

LabelMask fcm_mask(const BrainExtract& brain, const FcmFit& fit, double threshold_hu,
                   int open_radius) {
  LabelMask raw(brain.brain_mask.dims());
  std::size_t i = 0;
  const std::size_t k = fit.clusters();
  for (std::size_t n = 0; n < brain.brain_mask.size(); ++n) {
    if (brain.brain_mask[n] == 0) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (fit.membership(i, c) > fit.membership(i, best)) best = c;
    }
    raw[n] = fit.centers[best] > threshold_hu ? 1 : 0;
    ++i;
  }
  return morph::open(raw, morph::StructuringElement::ball(open_radius));
}

FcmSegmentation fcm_segment(const BrainExtract& brain, const FcmConfig& cfg) {
  cfg.validate();
  std::vector<double> values;
  values.reserve(brain.n_bv);
  for (std::size_t n = 0; n < brain.brain_mask.size(); ++n) {
    if (brain.brain_mask[n] != 0) values.push_back(brain.volume[n]);
  }
  std::vector<double> distinct = values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  FcmSegmentation out;
  if (distinct.size() < cfg.n_clusters) {
    // Too few distinct intensities to cluster: every distinct value is its own center.
    out.fit.centers = distinct;
    const std::size_t k = distinct.size();
    out.fit.memberships.assign(values.size() * k, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto pos = std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin();
      out.fit.memberships[i * k + static_cast<std::size_t>(pos)] = 1.0;
    }
  } else {
    out.fit = fcm_fit(values, cfg);
  }

  out.hemorrhage_mask = fcm_mask(brain, out.fit, cfg.threshold_hu, cfg.open_radius);
  out.cluster_map = LabelMask(brain.brain_mask.dims());
  std::size_t i = 0;
  for (std::size_t n = 0; n < brain.brain_mask.size(); ++n) {
    if (brain.brain_mask[n] == 0) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < out.fit.clusters(); ++c) {
      if (out.fit.membership(i, c) > out.fit.membership(i, best)) best = c;
    }
    out.cluster_map[n] = static_cast<LabelMask::Label>(best + 1);
    ++i;
  }
  return out;
}

}  // namespace hemoseg::fcm
