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

#include "hemoseg/morphology.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "hemoseg/error.hpp"
#include "hemoseg/parallel.hpp"

namespace hemoseg::morph {

StructuringElement::StructuringElement(std::vector<Offset> offsets)
    : offsets_(std::move(offsets)) {
  std::sort(offsets_.begin(), offsets_.end());
  offsets_.erase(std::unique(offsets_.begin(), offsets_.end()), offsets_.end());
  for (const auto& o : offsets_) {
    for (int c : o) extent_ = std::max(extent_, std::abs(c));
  }
}

StructuringElement StructuringElement::ball(int radius) {
  if (radius < 0) throw ConfigError("structuring element radius must be >= 0");
  std::vector<Offset> offs;
  const int r2 = radius * radius;
  for (int dz = -radius; dz <= radius; ++dz) {
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        if (dx * dx + dy * dy + dz * dz <= r2) offs.push_back({dx, dy, dz});
      }
    }
  }
  return StructuringElement(std::move(offs));
}

StructuringElement StructuringElement::cross6() { return ball(1); }

StructuringElement StructuringElement::cube26() {
  std::vector<Offset> offs;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) offs.push_back({dx, dy, dz});
  return StructuringElement(std::move(offs));
}

StructuringElement StructuringElement::from_offsets(std::vector<Offset> offsets) {
  const std::set<Offset> set(offsets.begin(), offsets.end());
  if (!set.count(Offset{0, 0, 0})) {
    throw ConfigError("structuring element must contain the origin");
  }
  for (const auto& o : set) {
    if (!set.count(Offset{-o[0], -o[1], -o[2]})) {
      throw ConfigError("structuring element must be symmetric");
    }
  }
  return StructuringElement(std::move(offsets));
}

Connectivity connectivity_from_int(int n) {
  if (n == 6) return Connectivity::k6;
  if (n == 26) return Connectivity::k26;
  throw ConfigError("connectivity must be 6 or 26, got " + std::to_string(n));
}

namespace {

// Foreground copy with a zero border of `pad` voxels on every side, so kernels
// can read any neighbour within `pad` without bounds checks.
struct Padded {
  long pad = 0;
  long px = 0;
  long py = 0;
  long pz = 0;
  std::vector<std::uint8_t> fg;

  Padded(const LabelMask& mask, long pad_voxels) : pad(pad_voxels) {
    const Dims& d = mask.dims();
    px = static_cast<long>(d.nx) + 2 * pad;
    py = static_cast<long>(d.ny) + 2 * pad;
    pz = static_cast<long>(d.nz) + 2 * pad;
    fg.assign(static_cast<std::size_t>(px * py * pz), 0);
    const long nx = static_cast<long>(d.nx);
    const long ny = static_cast<long>(d.ny);
    const auto* src = mask.labels().data();
    parallel_for(static_cast<long>(d.nz), d.count() >= kParallelMinVoxels, [&](long k) {
      for (long j = 0; j < ny; ++j) {
        const long row = nx * (j + ny * k);
        const long prow = at(0, j, k);
        for (long i = 0; i < nx; ++i) fg[static_cast<std::size_t>(prow + i)] = src[row + i] != 0;
      }
    });
  }

  long at(long i, long j, long k) const { return (i + pad) + px * ((j + pad) + py * (k + pad)); }
  long linear(const Offset& o) const { return o[0] + px * (o[1] + py * o[2]); }
};

// `want_all`: erosion (every offset must hit foreground); otherwise dilation.
// Offsets are symmetric, so reading v + o is the same as the Minkowski sum.
LabelMask apply_se(const LabelMask& mask, const StructuringElement& se, bool want_all) {
  const Dims d = mask.dims();
  LabelMask out(d);
  const Padded pm(mask, se.extent());
  std::vector<long> lin;
  lin.reserve(se.size());
  for (const auto& o : se.offsets()) lin.push_back(pm.linear(o));
  const long nx = static_cast<long>(d.nx);
  const long ny = static_cast<long>(d.ny);
  const std::uint8_t* src = pm.fg.data();
  auto* dst = out.labels().data();

  parallel_for(static_cast<long>(d.nz), d.count() >= kParallelMinVoxels, [&](long k) {
    for (long j = 0; j < ny; ++j) {
      const std::uint8_t* row = src + pm.at(0, j, k);
      auto* out_row = dst + nx * (j + ny * k);
      for (long i = 0; i < nx; ++i) {
        bool hit = want_all;
        for (long o : lin) {
          if ((row[i + o] != 0) != want_all) {
            hit = !want_all;
            break;
          }
        }
        out_row[i] = hit ? 1 : 0;
      }
    }
  });
  return out;
}

std::vector<Offset> neighbour_offsets(Connectivity conn) {
  std::vector<Offset> offs;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (conn == Connectivity::k6 && manhattan != 1) continue;
        offs.push_back({dx, dy, dz});
      }
  return offs;
}

}  // namespace

LabelMask erode(const LabelMask& mask, const StructuringElement& se) {
  return apply_se(mask, se, true);
}

LabelMask dilate(const LabelMask& mask, const StructuringElement& se) {
  return apply_se(mask, se, false);
}

LabelMask close(const LabelMask& mask, const StructuringElement& se) {
  return erode(dilate(mask, se), se);
}

LabelMask open(const LabelMask& mask, const StructuringElement& se) {
  return dilate(erode(mask, se), se);
}

ComponentLabeling connected_components(const LabelMask& mask, Connectivity conn) {
  const Dims d = mask.dims();
  const Padded pm(mask, 1);
  std::vector<long> lin;
  for (const auto& o : neighbour_offsets(conn)) lin.push_back(pm.linear(o));
  // Provisional labels in discovery order, i.e. ordered by smallest linear index.
  std::vector<std::uint32_t> provisional(pm.fg.size(), 0);
  std::vector<std::size_t> sizes;
  std::vector<long> stack;
  const long nx = static_cast<long>(d.nx);
  const long ny = static_cast<long>(d.ny);
  const long nz = static_cast<long>(d.nz);
  for (long k = 0; k < nz; ++k) {
    for (long j = 0; j < ny; ++j) {
      for (long i = 0; i < nx; ++i) {
        const long seed = pm.at(i, j, k);
        if (pm.fg[static_cast<std::size_t>(seed)] == 0 ||
            provisional[static_cast<std::size_t>(seed)] != 0) {
          continue;
        }
        const auto label = static_cast<std::uint32_t>(sizes.size() + 1);
        std::size_t size = 0;
        provisional[static_cast<std::size_t>(seed)] = label;
        stack.push_back(seed);
        while (!stack.empty()) {
          const long v = stack.back();
          stack.pop_back();
          ++size;
          for (long o : lin) {
            const auto n = static_cast<std::size_t>(v + o);
            if (pm.fg[n] != 0 && provisional[n] == 0) {
              provisional[n] = label;
              stack.push_back(v + o);
            }
          }
        }
        sizes.push_back(size);
      }
    }
  }

  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  // stable_sort keeps discovery order among equal sizes.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
  std::vector<std::uint32_t> relabel(sizes.size() + 1, 0);
  ComponentLabeling out{LabelMask(d), std::vector<std::size_t>(sizes.size())};
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    relabel[order[rank] + 1] = static_cast<std::uint32_t>(rank + 1);
    out.sizes[rank] = sizes[order[rank]];
  }
  auto* dst = out.labels.labels().data();
  for (long k = 0; k < nz; ++k) {
    for (long j = 0; j < ny; ++j) {
      const long prow = pm.at(0, j, k);
      auto* row = dst + nx * (j + ny * k);
      for (long i = 0; i < nx; ++i) row[i] = relabel[provisional[static_cast<std::size_t>(prow + i)]];
    }
  }
  return out;
}

LabelMask largest_component(const LabelMask& mask, Connectivity conn) {
  const ComponentLabeling cc = connected_components(mask, conn);
  LabelMask out(mask.dims());
  if (cc.count() == 0) return out;
  for (std::size_t n = 0; n < mask.size(); ++n) out[n] = cc.labels[n] == 1 ? 1 : 0;
  return out;
}

}  // namespace hemoseg::morph
