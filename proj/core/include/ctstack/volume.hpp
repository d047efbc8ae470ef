#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctstack/errors.hpp"

namespace ctstack {

/// Grey-level mapping parameters in Hounsfield units.
struct WindowSpec {
  double center = 0.0;
  double width = 1.0;
};

namespace detail {
struct ScanTag {};
struct MaskTag {};
struct ProbTag {};
struct NormTag {};
}  // namespace detail

/// Dense voxel grid. Storage is x-fastest, then y, then z.
template <typename T, typename Tag>
struct VoxelVolume {
  using value_type = T;

  std::string scan_id;
  int width = 0;   // voxels along x
  int height = 0;  // voxels along y
  int depth = 0;   // slices along z
  std::optional<std::array<double, 3>> spacing;  // mm per voxel
  std::vector<T> voxels;

  std::size_t size() const { return voxels.size(); }

  std::size_t slice_size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(width) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(height) * static_cast<std::size_t>(z));
  }

  T at(int x, int y, int z) const { return voxels[index(x, y, z)]; }
  T& at(int x, int y, int z) { return voxels[index(x, y, z)]; }

  std::span<const T> slice(int z) const {
    return {voxels.data() + slice_size() * static_cast<std::size_t>(z),
            slice_size()};
  }
  std::span<T> slice(int z) {
    return {voxels.data() + slice_size() * static_cast<std::size_t>(z),
            slice_size()};
  }

  template <typename U, typename UTag>
  bool same_geometry(const VoxelVolume<U, UTag>& other) const {
    return width == other.width && height == other.height &&
           depth == other.depth;
  }
};

/// Hounsfield-unit scan, signed 16-bit storage range.
using ScanVolume = VoxelVolume<std::int16_t, detail::ScanTag>;
/// Binary labels; every voxel is 0 or 1.
using MaskVolume = VoxelVolume<std::uint8_t, detail::MaskTag>;
/// Prediction probabilities in [0, 1].
using ProbVolume = VoxelVolume<float, detail::ProbTag>;
/// Windowed model input in [0, 1].
using NormalizedVolume = VoxelVolume<float, detail::NormTag>;

template <typename V>
V make_volume(std::string scan_id, int width, int height, int depth,
              typename V::value_type fill = {}) {
  if (width < 1 || height < 1 || depth < 1) {
    throw InvalidArgumentError("volume dimensions must be positive");
  }
  V v;
  v.scan_id = std::move(scan_id);
  v.width = width;
  v.height = height;
  v.depth = depth;
  v.voxels.assign(static_cast<std::size_t>(width) *
                      static_cast<std::size_t>(height) *
                      static_cast<std::size_t>(depth),
                  fill);
  return v;
}

template <typename T, typename Tag>
void validate_geometry(const VoxelVolume<T, Tag>& v) {
  if (v.width < 1 || v.height < 1 || v.depth < 1) {
    throw InvalidArgumentError(
        "volume dimensions must be positive (got " + std::to_string(v.width) +
        "x" + std::to_string(v.height) + "x" + std::to_string(v.depth) + ")");
  }
  const std::size_t expected = static_cast<std::size_t>(v.width) *
                               static_cast<std::size_t>(v.height) *
                               static_cast<std::size_t>(v.depth);
  if (v.voxels.size() != expected) {
    throw InvalidArgumentError("voxel count " + std::to_string(v.voxels.size()) +
                               " does not equal width*height*depth = " +
                               std::to_string(expected));
  }
}

/// Every mask voxel must be 0 or 1.
void validate_values(const MaskVolume& mask);
/// Every probability must be finite and in [0, 1].
void validate_values(const ProbVolume& prob);
void validate_values(const NormalizedVolume& norm);
inline void validate_values(const ScanVolume&) {}

template <typename A, typename B>
void require_same_geometry(const A& a, const B& b, std::string_view what) {
  if (!a.same_geometry(b)) {
    throw GeometryMismatchError(
        std::string(what) + ": geometry mismatch (" + std::to_string(a.width) +
        "x" + std::to_string(a.height) + "x" + std::to_string(a.depth) +
        " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
        "x" + std::to_string(b.depth) + ")");
  }
}

struct RescaleResult {
  std::vector<std::int16_t> values;
  std::size_t saturated = 0;  // results clamped to the i16 bounds
};

/// DICOM rescale: round(raw * slope + intercept), saturating at the signed
/// 16-bit bounds. Saturations are counted, not fatal.
RescaleResult apply_rescale(std::span<const std::int32_t> raw, double slope,
                            double intercept);

/// Clamp-linear grey-level map of one HU value into [0, 1]:
/// clamp((h - (center - width/2)) / width, 0, 1).
double window_value(double hu, const WindowSpec& window);

NormalizedVolume apply_window(const ScanVolume& scan, const WindowSpec& window);

inline constexpr int kStandardSize = 512;

/// Slice-wise resampling. Scans and normalized volumes interpolate
/// bilinearly; masks take the nearest voxel so values stay binary.
ScanVolume resize_to_standard(const ScanVolume& scan,
                              int target_width = kStandardSize,
                              int target_height = kStandardSize);
MaskVolume resize_to_standard(const MaskVolume& mask,
                              int target_width = kStandardSize,
                              int target_height = kStandardSize);
NormalizedVolume resize_to_standard(const NormalizedVolume& norm,
                                    int target_width = kStandardSize,
                                    int target_height = kStandardSize);

inline constexpr double kDefaultThreshold = 0.2;

/// Inclusive threshold: voxel is positive iff probability >= threshold.
MaskVolume threshold_prob(const ProbVolume& prob,
                          double threshold = kDefaultThreshold);

}  // namespace ctstack
