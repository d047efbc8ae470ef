#include "ctstack/volume_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include <json.hpp>

#include "ctstack/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctstack {

namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kRawFile = "voxels.raw";

std::size_t dtype_size(VoxelDtype dtype) {
  switch (dtype) {
    case VoxelDtype::i16:
      return 2;
    case VoxelDtype::u8:
      return 1;
    case VoxelDtype::f32:
      return 4;
  }
  return 0;
}

VoxelDtype dtype_from_name(const std::string& name, const fs::path& dir) {
  if (name == "i16") return VoxelDtype::i16;
  if (name == "u8") return VoxelDtype::u8;
  if (name == "f32") return VoxelDtype::f32;
  throw FormatError("meta.json: unknown dtype \"" + name + "\" in " +
                    dir.string());
}

json meta_to_json(const VolumeMeta& meta) {
  json j;
  j["scan_id"] = meta.scan_id;
  j["width"] = meta.width;
  j["height"] = meta.height;
  j["depth"] = meta.depth;
  j["dtype"] = dtype_name(meta.dtype);
  if (meta.spacing) {
    j["spacing"] = {(*meta.spacing)[0], (*meta.spacing)[1], (*meta.spacing)[2]};
  }
  if (meta.window) {
    j["window"] = {{"center", meta.window->center},
                   {"width", meta.window->width}};
  }
  return j;
}

template <typename T>
T require_field(const json& j, const char* field, const fs::path& dir) {
  if (!j.contains(field)) {
    throw FormatError("meta.json: missing field \"" + std::string(field) +
                      "\" in " + dir.string());
  }
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw FormatError("meta.json: field \"" + std::string(field) +
                      "\" has the wrong type in " + dir.string());
  }
}

std::string encode_i16(const std::vector<std::int16_t>& values) {
  std::string bytes(values.size() * 2, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(values[i]);
    bytes[2 * i] = static_cast<char>(u & 0xff);
    bytes[2 * i + 1] = static_cast<char>((u >> 8) & 0xff);
  }
  return bytes;
}

std::string encode_u8(const std::vector<std::uint8_t>& values) {
  return std::string(reinterpret_cast<const char*>(values.data()),
                     values.size());
}

std::string encode_f32(const std::vector<float>& values) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    bytes[4 * i] = static_cast<char>(u & 0xff);
    bytes[4 * i + 1] = static_cast<char>((u >> 8) & 0xff);
    bytes[4 * i + 2] = static_cast<char>((u >> 16) & 0xff);
    bytes[4 * i + 3] = static_cast<char>((u >> 24) & 0xff);
  }
  return bytes;
}

std::vector<std::int16_t> decode_i16(const std::string& bytes) {
  std::vector<std::int16_t> values(bytes.size() / 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(
        static_cast<std::uint8_t>(bytes[2 * i]) |
        (static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[2 * i + 1]))
         << 8));
    values[i] = static_cast<std::int16_t>(u);
  }
  return values;
}

std::vector<float> decode_f32(const std::string& bytes) {
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t u =
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i])) |
        (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + 1]))
         << 8) |
        (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + 2]))
         << 16) |
        (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + 3]))
         << 24);
    values[i] = std::bit_cast<float>(u);
  }
  return values;
}

template <typename V>
VolumeMeta meta_of(const V& v, VoxelDtype dtype,
                   const std::optional<WindowSpec>& window) {
  VolumeMeta meta;
  meta.scan_id = v.scan_id;
  meta.width = v.width;
  meta.height = v.height;
  meta.depth = v.depth;
  meta.dtype = dtype;
  meta.spacing = v.spacing;
  meta.window = window;
  return meta;
}

void write_meta_and_raw(const fs::path& dir, const VolumeMeta& meta,
                        std::string raw) {
  fs::create_directories(dir);
  write_file_atomic(dir / kMetaFile, meta_to_json(meta).dump(2) + "\n");
  write_file_atomic(dir / kRawFile, raw);
}

std::string read_raw_checked(const fs::path& dir, const VolumeMeta& meta) {
  const fs::path raw_path = dir / kRawFile;
  const std::string bytes = read_file(raw_path);
  const std::size_t expected = static_cast<std::size_t>(meta.width) *
                               static_cast<std::size_t>(meta.height) *
                               static_cast<std::size_t>(meta.depth) *
                               dtype_size(meta.dtype);
  if (bytes.size() != expected) {
    throw FormatError("voxels.raw: expected " + std::to_string(expected) +
                      " bytes for " + std::to_string(meta.width) + "x" +
                      std::to_string(meta.height) + "x" +
                      std::to_string(meta.depth) + " " +
                      dtype_name(meta.dtype) + ", found " +
                      std::to_string(bytes.size()) + " in " +
                      raw_path.string());
  }
  return bytes;
}

void require_dtype(const VolumeMeta& meta, VoxelDtype expected,
                   const fs::path& dir) {
  if (meta.dtype != expected) {
    throw FormatError("meta.json: expected dtype " + dtype_name(expected) +
                      ", found " + dtype_name(meta.dtype) + " in " +
                      dir.string());
  }
}

template <typename V>
void apply_geometry(V& v, const VolumeMeta& meta) {
  v.scan_id = meta.scan_id;
  v.width = meta.width;
  v.height = meta.height;
  v.depth = meta.depth;
  v.spacing = meta.spacing;
}

}  // namespace

std::string dtype_name(VoxelDtype dtype) {
  switch (dtype) {
    case VoxelDtype::i16:
      return "i16";
    case VoxelDtype::u8:
      return "u8";
    case VoxelDtype::f32:
      return "f32";
  }
  return "?";
}

bool is_volume_dir(const fs::path& dir) {
  return fs::is_regular_file(dir / kMetaFile);
}

VolumeMeta read_meta(const fs::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / kMetaFile));
  } catch (const json::exception& e) {
    throw FormatError("meta.json: parse error in " + dir.string() + ": " +
                      e.what());
  }
  VolumeMeta meta;
  meta.scan_id = require_field<std::string>(j, "scan_id", dir);
  meta.width = require_field<int>(j, "width", dir);
  meta.height = require_field<int>(j, "height", dir);
  meta.depth = require_field<int>(j, "depth", dir);
  meta.dtype = dtype_from_name(require_field<std::string>(j, "dtype", dir), dir);
  if (meta.width < 1 || meta.height < 1 || meta.depth < 1) {
    throw FormatError("meta.json: dimensions must be positive in " +
                      dir.string());
  }
  if (j.contains("spacing") && !j.at("spacing").is_null()) {
    const auto& s = j.at("spacing");
    if (!s.is_array() || s.size() != 3) {
      throw FormatError("meta.json: field \"spacing\" must be a 3-element "
                        "array in " +
                        dir.string());
    }
    meta.spacing = std::array<double, 3>{s[0].get<double>(), s[1].get<double>(),
                                         s[2].get<double>()};
    for (double v : *meta.spacing) {
      if (!(v > 0.0)) {
        throw FormatError("meta.json: spacing values must be positive in " +
                          dir.string());
      }
    }
  }
  if (j.contains("window") && !j.at("window").is_null()) {
    const auto& w = j.at("window");
    WindowSpec spec;
    spec.center = require_field<double>(w, "center", dir);
    spec.width = require_field<double>(w, "width", dir);
    if (!(spec.width > 0.0)) {
      throw FormatError("meta.json: window width must be positive in " +
                        dir.string());
    }
    meta.window = spec;
  }
  return meta;
}

void write_native(const fs::path& dir, const ScanVolume& scan,
                  const std::optional<WindowSpec>& window) {
  validate_geometry(scan);
  write_meta_and_raw(dir, meta_of(scan, VoxelDtype::i16, window),
                     encode_i16(scan.voxels));
}

void write_native(const fs::path& dir, const MaskVolume& mask) {
  validate_geometry(mask);
  validate_values(mask);
  write_meta_and_raw(dir, meta_of(mask, VoxelDtype::u8, std::nullopt),
                     encode_u8(mask.voxels));
}

void write_native(const fs::path& dir, const ProbVolume& prob) {
  validate_geometry(prob);
  validate_values(prob);
  write_meta_and_raw(dir, meta_of(prob, VoxelDtype::f32, std::nullopt),
                     encode_f32(prob.voxels));
}

void write_native(const fs::path& dir, const NormalizedVolume& norm) {
  validate_geometry(norm);
  validate_values(norm);
  write_meta_and_raw(dir, meta_of(norm, VoxelDtype::f32, std::nullopt),
                     encode_f32(norm.voxels));
}

ScanVolume read_scan(const fs::path& dir, std::optional<WindowSpec>* window) {
  const VolumeMeta meta = read_meta(dir);
  require_dtype(meta, VoxelDtype::i16, dir);
  ScanVolume scan;
  apply_geometry(scan, meta);
  scan.voxels = decode_i16(read_raw_checked(dir, meta));
  if (window) *window = meta.window;
  return scan;
}

MaskVolume read_mask(const fs::path& dir) {
  const VolumeMeta meta = read_meta(dir);
  require_dtype(meta, VoxelDtype::u8, dir);
  MaskVolume mask;
  apply_geometry(mask, meta);
  const std::string bytes = read_raw_checked(dir, meta);
  mask.voxels.assign(bytes.begin(), bytes.end());
  for (std::size_t i = 0; i < mask.voxels.size(); ++i) {
    if (mask.voxels[i] > 1) {
      throw FormatError("voxels.raw: mask voxel " + std::to_string(i) +
                        " has value " + std::to_string(mask.voxels[i]) +
                        "; expected 0 or 1 in " + dir.string());
    }
  }
  return mask;
}

namespace {

template <typename V>
V read_f32_volume(const fs::path& dir, const char* kind) {
  const VolumeMeta meta = read_meta(dir);
  require_dtype(meta, VoxelDtype::f32, dir);
  V v;
  apply_geometry(v, meta);
  v.voxels = decode_f32(read_raw_checked(dir, meta));
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    const float val = v.voxels[i];
    if (!(val >= 0.0f && val <= 1.0f)) {
      throw FormatError("voxels.raw: " + std::string(kind) + " voxel " +
                        std::to_string(i) + " has value " +
                        std::to_string(val) + "; expected [0, 1] in " +
                        dir.string());
    }
  }
  return v;
}

}  // namespace

ProbVolume read_prob(const fs::path& dir) {
  return read_f32_volume<ProbVolume>(dir, "probability");
}

NormalizedVolume read_normalized(const fs::path& dir) {
  return read_f32_volume<NormalizedVolume>(dir, "normalized");
}

}  // namespace ctstack
