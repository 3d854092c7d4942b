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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hemoseg/preprocess.hpp"
#include "hemoseg/volume.hpp"

namespace hemoseg {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kTruePositive{0, 255, 0};
inline constexpr Rgb kFalseNegative{255, 0, 0};
inline constexpr Rgb kFalsePositive{0, 0, 255};

/// RGB pixels (row-major, nx * ny) of slice `z`: windowed grayscale with
/// green = correct, red = missed, blue = false alarm. Without truth every
/// predicted voxel is green.
std::vector<Rgb> render_slice(const Volume3D& vol, const LabelMask& pred, const LabelMask* truth,
                              std::size_t z, const WindowBounds& window = {});

/// Writes one binary PPM (P6) per z-slice as slice_NNN.ppm; returns the file count.
std::size_t export_overlays(const Volume3D& vol, const LabelMask& pred, const LabelMask* truth,
                            const std::filesystem::path& out_dir,
                            const WindowBounds& window = {});

}  // namespace hemoseg
