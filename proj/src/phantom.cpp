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

#include "hemoseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hemoseg/config.hpp"
#include "hemoseg/error.hpp"
#include "hemoseg/morphology.hpp"
#include "hemoseg/rng.hpp"

namespace hemoseg::phantom {

namespace {

enum Tissue : std::uint8_t { kAir = 0, kScalp, kSkull, kBrain };

// Random streams: one Box-Muller pair per voxel per stream.
constexpr std::uint32_t kStreamIntensity = 0;

double ellipsoid_r2(const Eigen::Vector3d& p, const Eigen::Vector3d& c,
                    const std::array<double, 3>& axes, double grow) {
  double r2 = 0.0;
  for (int n = 0; n < 3; ++n) {
    const double q = (p[n] - c[n]) / (axes[n] + grow);
    r2 += q * q;
  }
  return r2;
}

Eigen::Vector3d voxel_point(std::size_t idx, const Dims& d) {
  const VoxelCoord c = coord_of(idx, d);
  return {static_cast<double>(c.i), static_cast<double>(c.j), static_cast<double>(c.k)};
}

}  // namespace

Eigen::Vector3d PhantomSpec::center() const {
  if (brain_center) return *brain_center;
  return {(static_cast<double>(dims.nx) - 1) / 2.0, (static_cast<double>(dims.ny) - 1) / 2.0,
          (static_cast<double>(dims.nz) - 1) / 2.0};
}

PhantomOutput generate(const PhantomSpec& spec) {
  const Dims d = spec.dims;
  if (d.count() == 0) throw ConfigError("phantom dims must be positive");
  const std::size_t n = d.count();
  const Eigen::Vector3d c = spec.center();

  std::vector<Tissue> tissue(n, kAir);
  for (std::size_t v = 0; v < n; ++v) {
    const Eigen::Vector3d p = voxel_point(v, d);
    if (ellipsoid_r2(p, c, spec.brain_semi_axes, 0.0) <= 1.0) {
      tissue[v] = kBrain;
    } else if (ellipsoid_r2(p, c, spec.brain_semi_axes, spec.skull_thickness) <= 1.0) {
      const double dy = p[1] - c[1];
      const double dz = p[2] - c[2];
      const bool gap = spec.skull_gap_radius > 0 && p[0] > c[0] &&
                       dy * dy + dz * dz <= spec.skull_gap_radius * spec.skull_gap_radius;
      tissue[v] = gap ? kScalp : kSkull;
    } else if (ellipsoid_r2(p, c, spec.brain_semi_axes,
                            spec.skull_thickness + spec.scalp_thickness) <= 1.0) {
      tissue[v] = kScalp;
    }
  }

  PhantomOutput out;
  out.truth_mask = LabelMask(d);
  out.brain_truth = LabelMask(d);
  out.skull_truth = LabelMask(d);
  for (std::size_t v = 0; v < n; ++v) {
    out.brain_truth[v] = tissue[v] == kBrain;
    out.skull_truth[v] = tissue[v] == kSkull;
  }

  std::vector<std::string> types;
  for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
    const BlobSpec& blob = spec.blobs[b];
    const std::string name = "blob " + std::to_string(b);
    if (blob.radius.has_value() == blob.voxels.has_value()) {
      throw ConfigError(name + ": exactly one of radius or voxels must be set");
    }
    Eigen::LLT<Eigen::Matrix3d> llt(blob.shape);
    if (!blob.shape.isApprox(blob.shape.transpose()) || llt.info() != Eigen::Success) {
      throw ConfigError(name + ": shape must be symmetric positive definite");
    }
    const Eigen::Matrix3d precision = llt.solve(Eigen::Matrix3d::Identity());
    std::vector<double> d2(n);
    for (std::size_t v = 0; v < n; ++v) {
      const Eigen::Vector3d dx = voxel_point(v, d) - blob.center;
      d2[v] = dx.dot(precision * dx);
    }
    double threshold = 0.0;
    if (blob.radius) {
      if (!(*blob.radius > 0)) throw ConfigError(name + ": radius must be positive");
      threshold = *blob.radius * *blob.radius * (1.0 + 1e-12);
    } else {
      if (*blob.voxels == 0 || *blob.voxels > n) throw ConfigError(name + ": invalid voxel count");
      std::vector<double> sorted = d2;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(*blob.voxels - 1),
                       sorted.end());
      threshold = sorted[*blob.voxels - 1];
    }
    BlobTruth truth{blob.center, blob.shape, blob.mean_hu, blob.std_hu, 0,
                    Eigen::Vector3d::Zero(), blob.type};
    for (std::size_t v = 0; v < n; ++v) {
      if (d2[v] > threshold) continue;
      if (tissue[v] != kBrain) throw ConfigError(name + ": blob extends outside the brain");
      if (out.truth_mask[v] != 0) throw ConfigError(name + ": blob overlaps another blob");
      out.truth_mask[v] = static_cast<LabelMask::Label>(b + 1);
      truth.voxel_count += 1;
      truth.centroid += voxel_point(v, d);
    }
    if (truth.voxel_count == 0) throw ConfigError(name + ": blob covers no voxel");
    truth.centroid /= static_cast<double>(truth.voxel_count);
    out.truth_params.push_back(truth);
    types.push_back(blob.type);
  }

  const Philox4x32 rng(spec.seed);
  std::vector<float> data(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long v = 0; v < count; ++v) {
    const auto [z_tissue, z_noise] = rng.normal_pair(static_cast<std::uint64_t>(v), kStreamIntensity);
    double value = 0.0;
    const auto label = out.truth_mask[static_cast<std::size_t>(v)];
    if (label != 0) {
      const BlobSpec& blob = spec.blobs[label - 1];
      value = blob.mean_hu + blob.std_hu * z_tissue;
    } else {
      switch (tissue[static_cast<std::size_t>(v)]) {
        case kBrain: value = spec.brain_mean_hu + spec.brain_std_hu * z_tissue; break;
        case kSkull: value = spec.skull_hu; break;
        case kScalp: value = spec.scalp_hu; break;
        case kAir: value = spec.air_hu; break;
      }
    }
    data[static_cast<std::size_t>(v)] = static_cast<float>(value + spec.noise_std_hu * z_noise);
  }
  out.volume = Volume3D(d, spec.spacing, std::move(data));
  out.boxes = boxes_from_truth(out.truth_mask, types);
  return out;
}

std::vector<BoundingBox> boxes_from_truth(const LabelMask& truth,
                                          const std::vector<std::string>& types) {
  const Dims d = truth.dims();
  const auto cc = morph::connected_components(binarize(truth), morph::Connectivity::k26);
  // (component, slice) -> box under construction
  std::map<std::pair<std::size_t, std::size_t>, BoundingBox> boxes;
  std::vector<std::string> component_type(cc.count() + 1, "unknown");
  std::vector<bool> typed(cc.count() + 1, false);
  for (std::size_t v = 0; v < truth.size(); ++v) {
    const auto comp = cc.labels[v];
    if (comp == 0) continue;
    if (!typed[comp]) {
      typed[comp] = true;
      const auto label = truth[v];
      if (label >= 1 && label <= types.size()) component_type[comp] = types[label - 1];
    }
    const VoxelCoord c = coord_of(v, d);
    auto [it, inserted] = boxes.try_emplace({comp, c.k});
    BoundingBox& b = it->second;
    if (inserted) {
      b = {c.k, c.i, c.j, c.i, c.j, component_type[comp]};
    } else {
      b.x_min = std::min(b.x_min, c.i);
      b.y_min = std::min(b.y_min, c.j);
      b.x_max = std::max(b.x_max, c.i);
      b.y_max = std::max(b.y_max, c.j);
    }
  }
  std::vector<BoundingBox> out;
  for (auto& [key, b] : boxes) out.push_back(b);
  std::stable_sort(out.begin(), out.end(), [](const BoundingBox& a, const BoundingBox& b) {
    return a.slice_index < b.slice_index;
  });
  return out;
}

namespace {

std::array<double, 3> triple(const KeyValues& kv, const std::string& key, std::array<double, 3> fb) {
  const auto v = kv.get_list(key, {fb[0], fb[1], fb[2]});
  if (v.size() != 3) kv.fail(key, "expected 3 comma-separated values");
  return {v[0], v[1], v[2]};
}

Eigen::Matrix3d shape_from(const KeyValues& kv, const std::string& key) {
  const auto v = kv.get_list(key, {1, 1, 1});
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  if (v.size() == 3) {
    m.diagonal() << v[0], v[1], v[2];
  } else if (v.size() == 6) {  // xx,yy,zz,xy,xz,yz
    m << v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2];
  } else if (v.size() == 9) {
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  } else {
    kv.fail(key, "expected 3, 6 or 9 values");
  }
  return m;
}

PhantomSpec spec_from(const KeyValues& kv) {
  PhantomSpec s;
  const auto dims = triple(kv, "dims", {64, 64, 64});
  for (double v : dims) {
    if (v < 1 || v != std::round(v)) kv.fail("dims", "dims must be positive integers");
  }
  s.dims = {static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]),
            static_cast<std::size_t>(dims[2])};
  const auto sp = triple(kv, "spacing", {1, 1, 1});
  for (double v : sp) {
    if (!(v > 0)) kv.fail("spacing", "spacing must be positive");
  }
  s.spacing = {sp[0], sp[1], sp[2]};
  if (kv.has("brain.center")) {
    const auto c = triple(kv, "brain.center", {0, 0, 0});
    s.brain_center = Eigen::Vector3d(c[0], c[1], c[2]);
  }
  s.brain_semi_axes = triple(kv, "brain.semi_axes", s.brain_semi_axes);
  for (double a : s.brain_semi_axes) {
    if (!(a > 0)) kv.fail("brain.semi_axes", "semi-axes must be positive");
  }
  s.brain_mean_hu = kv.get_double("brain.mean", s.brain_mean_hu);
  s.brain_std_hu = kv.get_double("brain.std", s.brain_std_hu);
  s.skull_thickness = kv.get_double("skull.thickness", s.skull_thickness);
  s.skull_hu = kv.get_double("skull.hu", s.skull_hu);
  s.skull_gap_radius = kv.get_double("skull.gap_radius", s.skull_gap_radius);
  s.scalp_thickness = kv.get_double("scalp.thickness", s.scalp_thickness);
  s.scalp_hu = kv.get_double("scalp.hu", s.scalp_hu);
  s.air_hu = kv.get_double("air.hu", s.air_hu);
  s.noise_std_hu = kv.get_double("noise.std", s.noise_std_hu);
  const long seed = kv.get_int("seed", static_cast<long>(s.seed));
  if (seed < 0) kv.fail("seed", "seed must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  for (const char* key : {"brain.std", "noise.std", "skull.thickness", "scalp.thickness",
                          "skull.gap_radius"}) {
    if (kv.has(key) && kv.get_double(key, 0) < 0) kv.fail(key, "must be non-negative");
  }

  std::map<long, std::string> blob_ids;  // numeric order
  for (const auto& key : kv.keys_with_prefix("blob.")) {
    const auto dot = key.find('.', 5);
    const std::string id = key.substr(5, dot == std::string::npos ? std::string::npos : dot - 5);
    try {
      std::size_t used = 0;
      const long num = std::stol(id, &used);
      if (used != id.size() || num < 0) throw std::invalid_argument(id);
      blob_ids[num] = id;
    } catch (const std::exception&) {
      kv.fail(key, "blob keys look like blob.<index>.<field>");
    }
  }
  for (const auto& [num, id] : blob_ids) {
    const std::string p = "blob." + id + ".";
    BlobSpec b;
    if (!kv.has(p + "center")) kv.fail(kv.keys_with_prefix(p).front(), "blob needs a center");
    const auto c = triple(kv, p + "center", {0, 0, 0});
    b.center = Eigen::Vector3d(c[0], c[1], c[2]);
    if (kv.has(p + "shape")) b.shape = shape_from(kv, p + "shape");
    if (kv.has(p + "radius")) b.radius = kv.get_double(p + "radius", 0);
    if (kv.has(p + "voxels")) {
      const long v = kv.get_int(p + "voxels", 0);
      if (v <= 0) kv.fail(p + "voxels", "must be positive");
      b.voxels = static_cast<std::size_t>(v);
    }
    if (b.radius.has_value() == b.voxels.has_value()) {
      kv.fail(p + "center", "blob needs exactly one of radius or voxels");
    }
    b.mean_hu = kv.get_double(p + "mean", b.mean_hu);
    b.std_hu = kv.get_double(p + "std", b.std_hu);
    if (const auto t = kv.get(p + "type")) b.type = *t;
    s.blobs.push_back(b);
  }
  kv.require_all_consumed();
  return s;
}

}  // namespace

PhantomSpec parse_spec(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  return spec_from(KeyValues::parse(in, source));
}

PhantomSpec read_spec(const std::filesystem::path& path) {
  return spec_from(KeyValues::load(path));
}

std::string format_spec(const PhantomSpec& s) {
  std::ostringstream out;
  out.precision(17);
  out << "dims=" << s.dims.nx << ',' << s.dims.ny << ',' << s.dims.nz << '\n'
      << "spacing=" << s.spacing.sx << ',' << s.spacing.sy << ',' << s.spacing.sz << '\n';
  if (s.brain_center) {
    out << "brain.center=" << (*s.brain_center)[0] << ',' << (*s.brain_center)[1] << ','
        << (*s.brain_center)[2] << '\n';
  }
  out << "brain.semi_axes=" << s.brain_semi_axes[0] << ',' << s.brain_semi_axes[1] << ','
      << s.brain_semi_axes[2] << '\n'
      << "brain.mean=" << s.brain_mean_hu << '\n'
      << "brain.std=" << s.brain_std_hu << '\n'
      << "skull.thickness=" << s.skull_thickness << '\n'
      << "skull.hu=" << s.skull_hu << '\n'
      << "skull.gap_radius=" << s.skull_gap_radius << '\n'
      << "scalp.thickness=" << s.scalp_thickness << '\n'
      << "scalp.hu=" << s.scalp_hu << '\n'
      << "air.hu=" << s.air_hu << '\n'
      << "noise.std=" << s.noise_std_hu << '\n'
      << "seed=" << s.seed << '\n';
  for (std::size_t b = 0; b < s.blobs.size(); ++b) {
    const auto& blob = s.blobs[b];
    const std::string p = "blob." + std::to_string(b) + ".";
    const auto& m = blob.shape;
    out << p << "center=" << blob.center[0] << ',' << blob.center[1] << ',' << blob.center[2] << '\n'
        << p << "shape=" << m(0, 0) << ',' << m(1, 1) << ',' << m(2, 2) << ',' << m(0, 1) << ','
        << m(0, 2) << ',' << m(1, 2) << '\n';
    if (blob.radius) out << p << "radius=" << *blob.radius << '\n';
    if (blob.voxels) out << p << "voxels=" << *blob.voxels << '\n';
    out << p << "mean=" << blob.mean_hu << '\n'
        << p << "std=" << blob.std_hu << '\n'
        << p << "type=" << blob.type << '\n';
  }
  return out.str();
}

PhantomSpec default_spec() {
  PhantomSpec s;
  BlobSpec blob;
  blob.center = Eigen::Vector3d(38.0, 36.0, 33.0);
  blob.shape.diagonal() << 1.4, 1.0, 0.8;
  blob.voxels = 800;
  s.blobs.push_back(blob);
  return s;
}

}  // namespace hemoseg::phantom
