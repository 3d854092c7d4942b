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

// Brute-force reference answers for the unit and acceptance tests. Each one is
// written from the definition, deliberately unlike the library algorithms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "hemoseg/morphology.hpp"
#include "hemoseg/volume.hpp"

namespace oracle {

using hemoseg::Dims;
using hemoseg::LabelMask;
using hemoseg::morph::Offset;

inline bool inside(long i, long j, long k, const Dims& d) {
  return i >= 0 && j >= 0 && k >= 0 && i < static_cast<long>(d.nx) &&
         j < static_cast<long>(d.ny) && k < static_cast<long>(d.nz);
}

inline std::size_t lin(long i, long j, long k, const Dims& d) {
  return static_cast<std::size_t>(i + static_cast<long>(d.nx) * (j + static_cast<long>(d.ny) * k));
}

/// Foreground set as coordinate triples.
inline std::set<std::array<long, 3>> points(const LabelMask& m) {
  std::set<std::array<long, 3>> out;
  const Dims& d = m.dims();
  for (long k = 0; k < static_cast<long>(d.nz); ++k)
    for (long j = 0; j < static_cast<long>(d.ny); ++j)
      for (long i = 0; i < static_cast<long>(d.nx); ++i)
        if (m[lin(i, j, k, d)] != 0) out.insert({i, j, k});
  return out;
}

/// {v : v + o is foreground for every o}, outside the grid counts as background.
inline LabelMask erode(const LabelMask& m, const std::vector<Offset>& se) {
  const auto fg = points(m);
  const Dims& d = m.dims();
  LabelMask out(d);
  for (long k = 0; k < static_cast<long>(d.nz); ++k)
    for (long j = 0; j < static_cast<long>(d.ny); ++j)
      for (long i = 0; i < static_cast<long>(d.nx); ++i) {
        bool all = true;
        for (const auto& o : se) all = all && fg.count({i + o[0], j + o[1], k + o[2]}) != 0;
        out[lin(i, j, k, d)] = all;
      }
  return out;
}

/// Minkowski sum {u + o}, clipped to the grid.
inline LabelMask dilate(const LabelMask& m, const std::vector<Offset>& se) {
  const Dims& d = m.dims();
  LabelMask out(d);
  for (const auto& p : points(m))
    for (const auto& o : se)
      if (inside(p[0] + o[0], p[1] + o[1], p[2] + o[2], d))
        out[lin(p[0] + o[0], p[1] + o[1], p[2] + o[2], d)] = 1;
  return out;
}

inline LabelMask close(const LabelMask& m, const std::vector<Offset>& se) {
  return erode(dilate(m, se), se);
}

inline LabelMask open(const LabelMask& m, const std::vector<Offset>& se) {
  return dilate(erode(m, se), se);
}

/// Offsets with squared length <= r^2.
inline std::vector<Offset> ball(int r) {
  std::vector<Offset> out;
  for (int z = -r; z <= r; ++z)
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x)
        if (x * x + y * y + z * z <= r * r) out.push_back({x, y, z});
  return out;
}

inline std::vector<Offset> cube() {
  std::vector<Offset> out;
  for (int z = -1; z <= 1; ++z)
    for (int y = -1; y <= 1; ++y)
      for (int x = -1; x <= 1; ++x) out.push_back({x, y, z});
  return out;
}

inline bool adjacent(const std::array<long, 3>& a, const std::array<long, 3>& b, int conn) {
  const long dx = std::abs(a[0] - b[0]), dy = std::abs(a[1] - b[1]), dz = std::abs(a[2] - b[2]);
  if (dx > 1 || dy > 1 || dz > 1) return false;
  const long l1 = dx + dy + dz;
  return conn == 26 ? l1 > 0 : l1 == 1;
}

/// Components by repeated min-label relaxation, numbered by descending size
/// with ties to the smaller minimum linear index.
inline LabelMask components(const LabelMask& m, int conn) {
  const Dims& d = m.dims();
  const std::size_t n = m.size();
  std::vector<std::size_t> root(n);
  std::iota(root.begin(), root.end(), 0);
  std::vector<std::array<long, 3>> coords(n);
  for (std::size_t v = 0; v < n; ++v) {
    coords[v] = {static_cast<long>(v % d.nx), static_cast<long>((v / d.nx) % d.ny),
                 static_cast<long>(v / (d.nx * d.ny))};
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (m[v] == 0) continue;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const std::array<long, 3> q{coords[v][0] + dx, coords[v][1] + dy, coords[v][2] + dz};
            if (!inside(q[0], q[1], q[2], d) || !adjacent(coords[v], q, conn)) continue;
            const std::size_t u = lin(q[0], q[1], q[2], d);
            if (m[u] != 0 && root[u] < root[v]) {
              root[v] = root[u];
              changed = true;
            }
          }
    }
  }
  std::map<std::size_t, std::size_t> size;  // min index -> voxel count
  for (std::size_t v = 0; v < n; ++v)
    if (m[v] != 0) ++size[root[v]];
  std::vector<std::pair<std::size_t, std::size_t>> order(size.begin(), size.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::map<std::size_t, std::uint32_t> label;
  for (std::size_t r = 0; r < order.size(); ++r)
    label[order[r].first] = static_cast<std::uint32_t>(r + 1);
  LabelMask out(d);
  for (std::size_t v = 0; v < n; ++v)
    if (m[v] != 0) out[v] = label[root[v]];
  return out;
}

inline double dice(const LabelMask& a, const LabelMask& b) {
  const auto pa = points(a), pb = points(b);
  if (pa.empty() && pb.empty()) return 1.0;
  std::vector<std::array<long, 3>> both;
  std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(both));
  return 2.0 * static_cast<double>(both.size()) / static_cast<double>(pa.size() + pb.size());
}

inline LabelMask random_mask(const Dims& d, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  LabelMask m(d);
  for (std::size_t v = 0; v < m.size(); ++v) m[v] = coin(rng);
  return m;
}

/// Lattice points with |p - c|^2 <= r^2.
inline std::size_t lattice_points(const std::array<double, 3>& c, double r, const Dims& d) {
  std::size_t n = 0;
  for (long k = 0; k < static_cast<long>(d.nz); ++k)
    for (long j = 0; j < static_cast<long>(d.ny); ++j)
      for (long i = 0; i < static_cast<long>(d.nx); ++i) {
        const double dx = i - c[0], dy = j - c[1], dz = k - c[2];
        if (dx * dx + dy * dy + dz * dz <= r * r) ++n;
      }
  return n;
}

/// The 48 symmetries of a cube grid: an axis permutation followed by reflections.
struct CubeSymmetry {
  std::array<int, 3> perm;
  std::array<bool, 3> flip;

  LabelMask apply(const LabelMask& m) const {
    const Dims& d = m.dims();
    const std::array<long, 3> n{static_cast<long>(d.nx), static_cast<long>(d.ny),
                                static_cast<long>(d.nz)};
    LabelMask out(d);
    for (long k = 0; k < n[2]; ++k)
      for (long j = 0; j < n[1]; ++j)
        for (long i = 0; i < n[0]; ++i) {
          const std::array<long, 3> src{i, j, k};
          std::array<long, 3> dst{};
          for (int a = 0; a < 3; ++a) {
            const long v = src[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
            dst[static_cast<std::size_t>(a)] = flip[static_cast<std::size_t>(a)] ? n[static_cast<std::size_t>(a)] - 1 - v : v;
          }
          out[lin(dst[0], dst[1], dst[2], d)] = m[lin(i, j, k, d)];
        }
    return out;
  }
};

inline std::vector<CubeSymmetry> cube_symmetries() {
  std::vector<CubeSymmetry> out;
  std::array<int, 3> p{0, 1, 2};
  do {
    for (int f = 0; f < 8; ++f) out.push_back({p, {(f & 1) != 0, (f & 2) != 0, (f & 4) != 0}});
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Same partition of the foreground, ignoring label numbering.
inline bool same_partition(const LabelMask& a, const LabelMask& b) {
  if (a.size() != b.size()) return false;
  std::map<std::uint32_t, std::uint32_t> ab, ba;
  for (std::size_t v = 0; v < a.size(); ++v) {
    if ((a[v] == 0) != (b[v] == 0)) return false;
    if (a[v] == 0) continue;
    const auto [it1, new1] = ab.emplace(a[v], b[v]);
    const auto [it2, new2] = ba.emplace(b[v], a[v]);
    if (it1->second != b[v] || it2->second != a[v]) return false;
  }
  return true;
}

}  // namespace oracle
