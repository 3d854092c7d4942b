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

#include "hemoseg/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hemoseg/error.hpp"

namespace hemoseg {

std::vector<Rgb> render_slice(const Volume3D& vol, const LabelMask& pred, const LabelMask* truth,
                              std::size_t z, const WindowBounds& window) {
  const Dims d = vol.dims();
  if (!(pred.dims() == d) || (truth && !(truth->dims() == d))) {
    throw DataError("overlay: volume and mask dims differ");
  }
  if (z >= d.nz) throw DataError("overlay: slice index out of range");
  std::vector<Rgb> px(d.nx * d.ny);
  const double span = window.i_max - window.i_min;
  for (std::size_t y = 0; y < d.ny; ++y) {
    for (std::size_t x = 0; x < d.nx; ++x) {
      const bool p = pred.at(x, y, z) != 0;
      const bool t = truth ? truth->at(x, y, z) != 0 : p;
      Rgb& out = px[x + d.nx * y];
      if (p && t) {
        out = kTruePositive;
      } else if (t) {
        out = kFalseNegative;
      } else if (p) {
        out = kFalsePositive;
      } else {
        const double g = std::clamp((vol.at(x, y, z) - window.i_min) / span, 0.0, 1.0);
        const auto level = static_cast<std::uint8_t>(std::lround(g * 255.0));
        out = {level, level, level};
      }
    }
  }
  return px;
}

std::size_t export_overlays(const Volume3D& vol, const LabelMask& pred, const LabelMask* truth,
                            const std::filesystem::path& out_dir, const WindowBounds& window) {
  std::filesystem::create_directories(out_dir);
  const Dims d = vol.dims();
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto px = render_slice(vol, pred, truth, z, window);
    char name[32];
    std::snprintf(name, sizeof(name), "slice_%03zu.ppm", z);
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write overlay " + (out_dir / name).string());
    out << "P6\n" << d.nx << ' ' << d.ny << "\n255\n";
    for (const Rgb& c : px) out.write(reinterpret_cast<const char*>(c.data()), 3);
  }
  return d.nz;
}

}  // namespace hemoseg
