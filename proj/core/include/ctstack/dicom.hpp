#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctstack/volume.hpp"

namespace ctstack {

// Minimal DICOM reader: explicit-VR little-endian, uncompressed PixelData,
// metadata limited to what scan assembly and windowing need. Everything
// else is rejected cleanly or skipped by declared length.

/// One parsed DICOM slice: geometry, rescale/window metadata and the
/// sign-interpreted stored pixel values.
struct SliceRecord {
  int rows = 0;
  int columns = 0;
  int bits_allocated = 16;
  int pixel_representation = 0;  // 0 unsigned, 1 signed two's complement
  bool pixel_representation_present = false;
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;
  std::optional<WindowSpec> window;
  std::optional<int> instance_number;
  std::optional<double> slice_location;
  std::vector<std::int32_t> pixels;  // rows*columns stored values, row-major
};

SliceRecord parse_dicom_file(std::span<const std::uint8_t> bytes);

enum class OrderingKey { instance_number, slice_location, filename };

std::string ordering_key_name(OrderingKey key);

struct AssemblyEntry {
  SliceRecord record;
  std::string source_name;  // filename, used for the fallback ordering
};

/// Slice set for one scan. When `ordering` is unset the assembler prefers
/// InstanceNumber, then SliceLocation, then the source filename.
struct ScanAssembly {
  std::string scan_id;
  std::vector<AssemblyEntry> slices;
  std::optional<OrderingKey> ordering;
};

struct AssembleResult {
  ScanVolume scan;
  std::optional<WindowSpec> window;  // first present window in sorted order
  OrderingKey ordering_used = OrderingKey::instance_number;
  std::size_t saturated_voxels = 0;
  std::size_t slices_defaulted_unsigned = 0;
};

/// Sorts slices ascending by the ordering key, applies per-slice rescale
/// and stacks them into a ScanVolume (width = columns, height = rows).
AssembleResult assemble_scan(const ScanAssembly& assembly);

}  // namespace ctstack
