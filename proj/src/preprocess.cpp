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

#include "hemoseg/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "hemoseg/error.hpp"

namespace hemoseg {

void WindowBounds::validate() const {
  if (!std::isfinite(i_min) || !std::isfinite(i_max) || !(i_min < i_max)) {
    throw ConfigError("window bounds require finite i_min < i_max");
  }
}

Volume3D window(const Volume3D& vol, const WindowBounds& bounds) {
  bounds.validate();
  Volume3D out = vol;
  const auto lo = static_cast<float>(bounds.i_min);
  const auto hi = static_cast<float>(bounds.i_max);
  auto data = out.data();
  const long n = static_cast<long>(data.size());
#pragma omp parallel for schedule(static)
  for (long v = 0; v < n; ++v) data[v] = std::clamp(data[v], lo, hi);
  return out;
}

SkullStrip strip_skull(const Volume3D& windowed, const WindowBounds& bounds,
                       const morph::StructuringElement& close_se) {
  const auto hi = static_cast<float>(bounds.i_max);
  const auto lo = static_cast<float>(bounds.i_min);
  LabelMask seed(windowed.dims());
  for (std::size_t n = 0; n < windowed.size(); ++n) seed[n] = windowed[n] >= hi ? 1 : 0;
  SkullStrip out{windowed, morph::close(seed, close_se)};
  for (std::size_t n = 0; n < out.volume.size(); ++n) {
    if (out.removal_mask[n] != 0) out.volume[n] = lo;
  }
  return out;
}

BrainExtract extract_brain(const Volume3D& stripped, const WindowBounds& bounds,
                           const morph::StructuringElement& erode_se,
                           morph::Connectivity conn) {
  const auto lo = static_cast<float>(bounds.i_min);
  LabelMask foreground(stripped.dims());
  for (std::size_t n = 0; n < stripped.size(); ++n) foreground[n] = stripped[n] > lo ? 1 : 0;
  if (count_nonzero(foreground) == 0) throw DataError("no brain found");

  const LabelMask brain = morph::erode(morph::largest_component(foreground, conn), erode_se);
  const std::size_t n_bv = count_nonzero(brain);
  if (n_bv == 0) throw DataError("no brain found (nothing left after edge erosion)");

  BrainExtract out{stripped, brain, n_bv};
  for (std::size_t n = 0; n < out.volume.size(); ++n) {
    if (brain[n] == 0) out.volume[n] = lo;
  }
  return out;
}

namespace {

morph::StructuringElement edge_element(int radius, bool in_3d) {
  auto ball = morph::StructuringElement::ball(radius);
  if (in_3d) return ball;
  std::vector<morph::Offset> disk;
  for (const auto& o : ball.offsets()) {
    if (o[2] == 0) disk.push_back(o);
  }
  return morph::StructuringElement::from_offsets(std::move(disk));
}

}  // namespace

BrainExtract preprocess(const Volume3D& vol, const PreprocessConfig& cfg) {
  const Volume3D windowed = window(vol, cfg.window);
  const SkullStrip stripped = strip_skull(
      windowed, cfg.window, morph::StructuringElement::ball(cfg.skull_close_radius));
  return extract_brain(stripped.volume, cfg.window,
                       edge_element(cfg.brain_erode_radius, cfg.erode_3d), cfg.connectivity);
}

}  // namespace hemoseg
