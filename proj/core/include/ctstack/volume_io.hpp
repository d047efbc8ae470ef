#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ctstack/volume.hpp"

namespace ctstack {

// Native volume format: a directory holding meta.json and voxels.raw.
// voxels.raw is little-endian, x-fastest; dtype is i16 for scans, u8 for
// masks and f32 for probability/normalized volumes.

enum class VoxelDtype { i16, u8, f32 };

std::string dtype_name(VoxelDtype dtype);

struct VolumeMeta {
  std::string scan_id;
  int width = 0;
  int height = 0;
  int depth = 0;
  VoxelDtype dtype = VoxelDtype::i16;
  std::optional<std::array<double, 3>> spacing;
  std::optional<WindowSpec> window;
};

/// True if the directory looks like a native volume (meta.json present).
bool is_volume_dir(const std::filesystem::path& dir);

VolumeMeta read_meta(const std::filesystem::path& dir);

void write_native(const std::filesystem::path& dir, const ScanVolume& scan,
                  const std::optional<WindowSpec>& window = std::nullopt);
void write_native(const std::filesystem::path& dir, const MaskVolume& mask);
void write_native(const std::filesystem::path& dir, const ProbVolume& prob);
void write_native(const std::filesystem::path& dir,
                  const NormalizedVolume& norm);

ScanVolume read_scan(const std::filesystem::path& dir,
                     std::optional<WindowSpec>* window = nullptr);
MaskVolume read_mask(const std::filesystem::path& dir);
ProbVolume read_prob(const std::filesystem::path& dir);
NormalizedVolume read_normalized(const std::filesystem::path& dir);

}  // namespace ctstack
