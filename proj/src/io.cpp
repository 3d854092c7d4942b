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

#include "hemoseg/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "hemoseg/error.hpp"

namespace hemoseg::io {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

constexpr std::int16_t kDtUInt8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

template <typename T>
T read_scalar(const char* p, bool swap) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

template <typename T>
void write_scalar(char* p, T v) {
  static_assert(std::endian::native == std::endian::little);
  std::memcpy(p, &v, sizeof(T));
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16: return 2;
    case ScalarType::kFloat32: return 4;
  }
  return 0;
}

std::int16_t nifti_code(ScalarType t) {
  switch (t) {
    case ScalarType::kUInt8: return kDtUInt8;
    case ScalarType::kInt16: return kDtInt16;
    case ScalarType::kFloat32: return kDtFloat32;
  }
  return 0;
}

ScalarType from_nifti_code(std::int16_t code) {
  switch (code) {
    case kDtUInt8: return ScalarType::kUInt8;
    case kDtInt16: return ScalarType::kInt16;
    case kDtFloat32: return ScalarType::kFloat32;
    default:
      throw DataError("unsupported NIfTI datatype code " + std::to_string(code));
  }
}

// Decodes `count` stored values starting at `p`.
std::vector<double> decode(const char* p, std::size_t count, ScalarType t, bool swap) {
  std::vector<double> out(count);
  const std::size_t sz = type_size(t);
  for (std::size_t n = 0; n < count; ++n) {
    const char* q = p + n * sz;
    switch (t) {
      case ScalarType::kUInt8: out[n] = static_cast<unsigned char>(*q); break;
      case ScalarType::kInt16: out[n] = read_scalar<std::int16_t>(q, swap); break;
      case ScalarType::kFloat32: out[n] = read_scalar<float>(q, swap); break;
    }
  }
  return out;
}

// Encodes stored values; integer targets must be exact.
void encode(std::span<const double> values, ScalarType t, char* dst) {
  const std::size_t sz = type_size(t);
  for (std::size_t n = 0; n < values.size(); ++n) {
    const double v = values[n];
    char* q = dst + n * sz;
    switch (t) {
      case ScalarType::kUInt8:
        if (v != std::round(v) || v < 0 || v > 255) {
          throw DataError("value " + std::to_string(v) + " not representable as u8");
        }
        *q = static_cast<char>(static_cast<unsigned char>(v));
        break;
      case ScalarType::kInt16:
        if (v != std::round(v) || v < std::numeric_limits<std::int16_t>::min() ||
            v > std::numeric_limits<std::int16_t>::max()) {
          throw DataError("value " + std::to_string(v) + " not representable as i16");
        }
        write_scalar(q, static_cast<std::int16_t>(v));
        break;
      case ScalarType::kFloat32:
        write_scalar(q, static_cast<float>(v));
        break;
    }
  }
}

std::vector<float> rescale_values(const std::vector<double>& stored, RescaleParams r) {
  std::vector<float> out(stored.size());
  for (std::size_t n = 0; n < stored.size(); ++n) {
    const double v = r.apply(stored[n]);
    if (!std::isfinite(v)) throw DataError("non-finite intensity after rescale");
    out[n] = static_cast<float>(v);
  }
  return out;
}

struct NiftiHeader {
  Dims dims;
  Spacing spacing;
  ScalarType type = ScalarType::kFloat32;
  RescaleParams rescale;
  std::size_t vox_offset = kVoxOffset;
  bool swap = false;
  bool single_file = true;
};

NiftiHeader parse_header(const std::vector<char>& bytes) {
  if (bytes.size() < kHeaderSize) throw DataError("file too short for a NIfTI-1 header");
  const char* h = bytes.data();
  NiftiHeader hdr;

  const auto dim0_le = read_scalar<std::int16_t>(h + 40, false);
  if (dim0_le >= 1 && dim0_le <= 7) {
    hdr.swap = false;
  } else {
    const auto dim0_be = read_scalar<std::int16_t>(h + 40, true);
    if (dim0_be < 1 || dim0_be > 7) throw DataError("NIfTI dim[0] out of range");
    hdr.swap = true;
  }
  if (std::memcmp(h + 344, "n+1\0", 4) == 0) {
    hdr.single_file = true;
  } else if (std::memcmp(h + 344, "ni1\0", 4) == 0) {
    hdr.single_file = false;
  } else {
    throw DataError("bad NIfTI-1 magic");
  }

  std::array<std::int16_t, 8> dim{};
  for (int n = 0; n < 8; ++n) dim[n] = read_scalar<std::int16_t>(h + 40 + 2 * n, hdr.swap);
  const int ndim = dim[0];
  std::array<std::size_t, 3> extent{1, 1, 1};
  for (int n = 1; n <= ndim; ++n) {
    if (dim[n] < 1) throw DataError("NIfTI dimension " + std::to_string(n) + " < 1");
    if (n <= 3) {
      extent[n - 1] = static_cast<std::size_t>(dim[n]);
    } else if (dim[n] != 1) {
      throw DataError("only 3D volumes are supported (dim[" + std::to_string(n) + "] != 1)");
    }
  }
  hdr.dims = {extent[0], extent[1], extent[2]};

  std::array<double, 3> pix{1.0, 1.0, 1.0};
  for (int n = 0; n < 3; ++n) {
    const double p = std::fabs(read_scalar<float>(h + 76 + 4 * (n + 1), hdr.swap));
    // Axes beyond dim[0] default to unit spacing.
    pix[n] = (n < ndim && p > 0 && std::isfinite(p)) ? p : 1.0;
  }
  hdr.spacing = {pix[0], pix[1], pix[2]};

  hdr.type = from_nifti_code(read_scalar<std::int16_t>(h + 70, hdr.swap));
  const double slope = read_scalar<float>(h + 112, hdr.swap);
  const double inter = read_scalar<float>(h + 116, hdr.swap);
  if (slope != 0.0 && std::isfinite(slope)) {
    hdr.rescale = {slope, std::isfinite(inter) ? inter : 0.0};
  }
  const double off = read_scalar<float>(h + 108, hdr.swap);
  if (hdr.single_file) {
    if (!(off >= static_cast<double>(kHeaderSize))) throw DataError("invalid vox_offset");
    hdr.vox_offset = static_cast<std::size_t>(off);
  } else {
    hdr.vox_offset = off > 0 ? static_cast<std::size_t>(off) : 0;
  }
  return hdr;
}

std::vector<char> make_header(const Dims& dims, const Spacing& spacing, ScalarType type) {
  std::vector<char> bytes(kVoxOffset, 0);
  char* h = bytes.data();
  write_scalar<std::int32_t>(h + 0, static_cast<std::int32_t>(kHeaderSize));
  h[38] = 'r';
  const std::array<std::size_t, 3> ext{dims.nx, dims.ny, dims.nz};
  for (std::size_t e : ext) {
    if (e > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
      throw DataError("dimension too large for NIfTI-1");
    }
  }
  const std::array<std::int16_t, 8> dim{3,
                                        static_cast<std::int16_t>(dims.nx),
                                        static_cast<std::int16_t>(dims.ny),
                                        static_cast<std::int16_t>(dims.nz),
                                        1, 1, 1, 1};
  for (int n = 0; n < 8; ++n) write_scalar<std::int16_t>(h + 40 + 2 * n, dim[n]);
  write_scalar<std::int16_t>(h + 70, nifti_code(type));
  write_scalar<std::int16_t>(h + 72, static_cast<std::int16_t>(8 * type_size(type)));
  const std::array<float, 8> pixdim{1.0f,
                                    static_cast<float>(spacing.sx),
                                    static_cast<float>(spacing.sy),
                                    static_cast<float>(spacing.sz),
                                    1.0f, 1.0f, 1.0f, 1.0f};
  for (int n = 0; n < 8; ++n) write_scalar<float>(h + 76 + 4 * n, pixdim[n]);
  write_scalar<float>(h + 108, static_cast<float>(kVoxOffset));
  write_scalar<float>(h + 112, 1.0f);
  write_scalar<float>(h + 116, 0.0f);
  h[123] = 2;  // xyzt_units: millimeters
  // sform: diagonal scaling by spacing
  write_scalar<std::int16_t>(h + 254, 1);
  write_scalar<float>(h + 280, static_cast<float>(spacing.sx));
  write_scalar<float>(h + 296 + 4, static_cast<float>(spacing.sy));
  write_scalar<float>(h + 312 + 8, static_cast<float>(spacing.sz));
  std::memcpy(h + 344, "n+1\0", 4);
  return bytes;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& value, std::size_t expected,
                               const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const std::string t = trim(item);
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw DataError("sidecar: malformed number in '" + key + "'");
    }
  }
  if (out.size() != expected) {
    throw DataError("sidecar: '" + key + "' needs " + std::to_string(expected) + " values");
  }
  return out;
}

}  // namespace

const char* to_string(ScalarType t) {
  switch (t) {
    case ScalarType::kUInt8: return "u8";
    case ScalarType::kInt16: return "i16";
    case ScalarType::kFloat32: return "f32";
  }
  return "?";
}

ScalarType scalar_type_from_string(const std::string& name) {
  if (name == "u8") return ScalarType::kUInt8;
  if (name == "i16") return ScalarType::kInt16;
  if (name == "f32") return ScalarType::kFloat32;
  throw DataError("unsupported scalar type '" + name + "'");
}

LoadedVolume load_nifti(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file(path);
  const NiftiHeader hdr = parse_header(bytes);

  const std::size_t count = hdr.dims.count();
  const std::size_t payload = count * type_size(hdr.type);
  std::vector<double> stored;
  if (hdr.single_file) {
    if (bytes.size() < hdr.vox_offset || bytes.size() - hdr.vox_offset != payload) {
      throw DataError("NIfTI payload length does not match header dims");
    }
    stored = decode(bytes.data() + hdr.vox_offset, count, hdr.type, hdr.swap);
  } else {
    auto img_path = path;
    img_path.replace_extension(".img");
    const std::vector<char> img = read_file(img_path);
    if (img.size() < hdr.vox_offset || img.size() - hdr.vox_offset != payload) {
      throw DataError("NIfTI .img payload length does not match header dims");
    }
    stored = decode(img.data() + hdr.vox_offset, count, hdr.type, hdr.swap);
  }
  return {Volume3D(hdr.dims, hdr.spacing, rescale_values(stored, hdr.rescale)), hdr.rescale,
          hdr.type};
}

void save_nifti(const Volume3D& vol, const std::filesystem::path& path, ScalarType type) {
  std::vector<char> bytes = make_header(vol.dims(), vol.spacing(), type);
  const std::size_t offset = bytes.size();
  bytes.resize(offset + vol.size() * type_size(type));
  std::vector<double> values(vol.data().begin(), vol.data().end());
  encode(values, type, bytes.data() + offset);
  write_file(path, bytes);
}

void save_nifti(const LabelMask& mask, const std::filesystem::path& path,
                const Spacing& spacing) {
  const auto max_label = mask.max_label();
  if (max_label > static_cast<LabelMask::Label>(std::numeric_limits<std::int16_t>::max())) {
    throw DataError("mask labels exceed int16 range");
  }
  const ScalarType type = max_label <= 255 ? ScalarType::kUInt8 : ScalarType::kInt16;
  std::vector<char> bytes = make_header(mask.dims(), spacing, type);
  const std::size_t offset = bytes.size();
  bytes.resize(offset + mask.size() * type_size(type));
  std::vector<double> values(mask.labels().begin(), mask.labels().end());
  encode(values, type, bytes.data() + offset);
  write_file(path, bytes);
}

LabelMask load_mask_nifti(const std::filesystem::path& path) {
  const LoadedVolume loaded = load_nifti(path);
  const auto data = loaded.volume.data();
  std::vector<LabelMask::Label> labels(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    const float v = data[n];
    if (v < 0 || v != std::round(v)) {
      throw DataError("mask contains a non-integer or negative label");
    }
    labels[n] = static_cast<LabelMask::Label>(v);
  }
  return LabelMask(loaded.volume.dims(), std::move(labels));
}

LoadedVolume load_raw(const std::filesystem::path& data_path,
                      const std::filesystem::path& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw DataError("cannot open sidecar " + sidecar_path.string());

  std::optional<Dims> dims;
  Spacing spacing;
  std::optional<ScalarType> type;
  RescaleParams rescale;
  std::string line;
  int lineno = 0;
  while (std::getline(side, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError("sidecar line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "dims") {
      const auto v = parse_list(value, 3, key);
      for (double d : v) {
        if (d < 1 || d != std::round(d)) throw DataError("sidecar: dims must be positive integers");
      }
      dims = Dims{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                  static_cast<std::size_t>(v[2])};
    } else if (key == "spacing") {
      const auto v = parse_list(value, 3, key);
      spacing = {v[0], v[1], v[2]};
    } else if (key == "dtype") {
      type = scalar_type_from_string(value);
    } else if (key == "slope") {
      rescale.slope = parse_list(value, 1, key)[0];
    } else if (key == "intercept") {
      rescale.intercept = parse_list(value, 1, key)[0];
    } else if (key == "endianness" || key == "endian") {
      if (value != "little") throw DataError("sidecar: only little-endian payloads supported");
    } else {
      throw DataError("sidecar line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!dims) throw DataError("sidecar: missing dims");
  if (!type) throw DataError("sidecar: missing dtype");
  if (rescale.slope == 0.0 || !std::isfinite(rescale.slope) ||
      !std::isfinite(rescale.intercept)) {
    throw DataError("sidecar: slope must be nonzero and finite");
  }

  const std::vector<char> bytes = read_file(data_path);
  const std::size_t count = dims->count();
  if (bytes.size() != count * type_size(*type)) {
    throw DataError("raw payload holds " + std::to_string(bytes.size() / type_size(*type)) +
                    " values, dims require " + std::to_string(count));
  }
  const std::vector<double> stored = decode(bytes.data(), count, *type, false);
  return {Volume3D(*dims, spacing, rescale_values(stored, rescale)), rescale, *type};
}

void save_raw(const Volume3D& vol, const std::filesystem::path& data_path,
              const std::filesystem::path& sidecar_path, ScalarType type,
              RescaleParams rescale) {
  if (rescale.slope == 0.0) throw DataError("rescale slope must be nonzero");
  std::vector<double> stored(vol.size());
  for (std::size_t n = 0; n < vol.size(); ++n) {
    stored[n] = (static_cast<double>(vol[n]) - rescale.intercept) / rescale.slope;
  }
  std::vector<char> bytes(vol.size() * type_size(type));
  encode(stored, type, bytes.data());
  write_file(data_path, bytes);

  std::ofstream side(sidecar_path, std::ios::trunc);
  if (!side) throw DataError("cannot write " + sidecar_path.string());
  side.precision(17);
  const auto& d = vol.dims();
  const auto& s = vol.spacing();
  side << "dims=" << d.nx << ',' << d.ny << ',' << d.nz << '\n'
       << "spacing=" << s.sx << ',' << s.sy << ',' << s.sz << '\n'
       << "dtype=" << to_string(type) << '\n'
       << "endianness=little\n"
       << "slope=" << rescale.slope << '\n'
       << "intercept=" << rescale.intercept << '\n';
}

LoadedVolume load_volume(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".nii" || ext == ".hdr") return load_nifti(path);
  auto sidecar = path;
  sidecar.replace_extension(".txt");
  return load_raw(path, sidecar);
}

}  // namespace hemoseg::io
