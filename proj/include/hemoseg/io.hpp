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

#include <filesystem>
#include <string>

#include "hemoseg/volume.hpp"

namespace hemoseg::io {

/// Linear acquisition rescale: intensity = slope * stored + intercept.
struct RescaleParams {
  double slope = 1.0;
  double intercept = 0.0;

  double apply(double stored) const { return slope * stored + intercept; }
};

/// On-disk scalar types understood by the readers and writers.
enum class ScalarType { kUInt8, kInt16, kFloat32 };

const char* to_string(ScalarType t);
ScalarType scalar_type_from_string(const std::string& name);

struct LoadedVolume {
  Volume3D volume;
  RescaleParams rescale;  // as applied while loading
  ScalarType stored_type = ScalarType::kFloat32;
};

/// Reads a NIfTI-1 volume (".nii" single file, or ".hdr"/".img" pair).
///
/// Byte order is detected from dim[0]. A zero scl_slope means identity rescale.
/// Only the first three dimensions are used; higher dimensions must be 1.
LoadedVolume load_nifti(const std::filesystem::path& path);

/// Writes a single-file NIfTI-1 volume (magic "n+1", vox_offset 352).
///
/// Integer types require every value to be exactly representable.
void save_nifti(const Volume3D& vol, const std::filesystem::path& path,
                ScalarType type = ScalarType::kFloat32);

/// Writes a mask as uint8 (int16 when labels exceed 255).
void save_nifti(const LabelMask& mask, const std::filesystem::path& path,
                const Spacing& spacing = {});

/// Reads a mask; stored values must be non-negative integers.
LabelMask load_mask_nifti(const std::filesystem::path& path);

/// Raw little-endian payload described by a key-value sidecar:
///   dims=nx,ny,nz  spacing=sx,sy,sz  dtype=i16|f32|u8  slope=  intercept=
LoadedVolume load_raw(const std::filesystem::path& data_path,
                      const std::filesystem::path& sidecar_path);

void save_raw(const Volume3D& vol, const std::filesystem::path& data_path,
              const std::filesystem::path& sidecar_path,
              ScalarType type = ScalarType::kFloat32, RescaleParams rescale = {});

/// Loads ".nii"/".hdr" as NIfTI, anything else as raw with `<stem>.txt` sidecar.
LoadedVolume load_volume(const std::filesystem::path& path);

}  // namespace hemoseg::io
