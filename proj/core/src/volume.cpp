#include "ctstack/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctstack {

namespace {

constexpr double kI16Min = std::numeric_limits<std::int16_t>::min();
constexpr double kI16Max = std::numeric_limits<std::int16_t>::max();

}  // namespace

void validate_values(const MaskVolume& mask) {
  for (std::size_t i = 0; i < mask.voxels.size(); ++i) {
    if (mask.voxels[i] > 1) {
      throw InvalidArgumentError("mask voxel " + std::to_string(i) +
                                 " has value " +
                                 std::to_string(mask.voxels[i]) +
                                 "; expected 0 or 1");
    }
  }
}

namespace {

void validate_unit_range(const std::vector<float>& values, const char* kind) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw InvalidArgumentError(std::string(kind) + " voxel " +
                                 std::to_string(i) + " has value " +
                                 std::to_string(v) + "; expected [0, 1]");
    }
  }
}

}  // namespace

void validate_values(const ProbVolume& prob) {
  validate_unit_range(prob.voxels, "probability");
}

void validate_values(const NormalizedVolume& norm) {
  validate_unit_range(norm.voxels, "normalized");
}

RescaleResult apply_rescale(std::span<const std::int32_t> raw, double slope,
                            double intercept) {
  if (slope == 0.0 || !std::isfinite(slope) || !std::isfinite(intercept)) {
    throw InvalidArgumentError("rescale slope must be nonzero and finite");
  }
  RescaleResult out;
  out.values.reserve(raw.size());
  for (std::int32_t v : raw) {
    double mapped = std::round(static_cast<double>(v) * slope + intercept);
    if (mapped < kI16Min) {
      mapped = kI16Min;
      ++out.saturated;
    } else if (mapped > kI16Max) {
      mapped = kI16Max;
      ++out.saturated;
    }
    out.values.push_back(static_cast<std::int16_t>(mapped));
  }
  return out;
}

double window_value(double hu, const WindowSpec& window) {
  if (!(window.width > 0.0)) {
    throw InvalidArgumentError("window width must be positive");
  }
  const double t = (hu - (window.center - window.width / 2.0)) / window.width;
  return std::clamp(t, 0.0, 1.0);
}

NormalizedVolume apply_window(const ScanVolume& scan,
                              const WindowSpec& window) {
  if (!(window.width > 0.0)) {
    throw InvalidArgumentError("window width must be positive");
  }
  validate_geometry(scan);

  // The HU domain is 16-bit: map it once, then look voxels up.
  std::vector<float> lut(65536);
  for (int i = 0; i < 65536; ++i) {
    lut[static_cast<std::size_t>(i)] =
        static_cast<float>(window_value(static_cast<double>(i - 32768), window));
  }

  NormalizedVolume out;
  out.scan_id = scan.scan_id;
  out.width = scan.width;
  out.height = scan.height;
  out.depth = scan.depth;
  out.spacing = scan.spacing;
  out.voxels.resize(scan.voxels.size());
  for (std::size_t i = 0; i < scan.voxels.size(); ++i) {
    out.voxels[i] = lut[static_cast<std::size_t>(
        static_cast<std::int32_t>(scan.voxels[i]) + 32768)];
  }
  return out;
}

namespace {

/// Pixel-center source coordinate for a destination index.
double src_coord(int dst, int dst_n, int src_n) {
  return (static_cast<double>(dst) + 0.5) *
             (static_cast<double>(src_n) / static_cast<double>(dst_n)) -
         0.5;
}

struct AxisMap {
  std::vector<int> lo;       // floor index, clamped
  std::vector<int> hi;       // floor index + 1, clamped
  std::vector<double> frac;  // interpolation weight toward hi
  std::vector<int> nearest;  // nearest index, clamped
};

AxisMap build_axis_map(int src_n, int dst_n) {
  AxisMap m;
  m.lo.resize(static_cast<std::size_t>(dst_n));
  m.hi.resize(static_cast<std::size_t>(dst_n));
  m.frac.resize(static_cast<std::size_t>(dst_n));
  m.nearest.resize(static_cast<std::size_t>(dst_n));
  for (int i = 0; i < dst_n; ++i) {
    const double s = src_coord(i, dst_n, src_n);
    const double fl = std::floor(s);
    const int lo = static_cast<int>(fl);
    m.lo[static_cast<std::size_t>(i)] = std::clamp(lo, 0, src_n - 1);
    m.hi[static_cast<std::size_t>(i)] = std::clamp(lo + 1, 0, src_n - 1);
    m.frac[static_cast<std::size_t>(i)] = s - fl;
    m.nearest[static_cast<std::size_t>(i)] =
        std::clamp(static_cast<int>(std::floor(s + 0.5)), 0, src_n - 1);
  }
  return m;
}

template <typename V>
void check_resize_inputs(const V& v, int tw, int th) {
  validate_geometry(v);
  if (v.width < 2 || v.height < 2) {
    throw InvalidArgumentError("resize requires source slices of at least 2x2 "
                               "voxels (got " +
                               std::to_string(v.width) + "x" +
                               std::to_string(v.height) + ")");
  }
  if (tw < 1 || th < 1) {
    throw InvalidArgumentError("resize target must be positive");
  }
}

template <typename V, typename Sampler>
V resize_slicewise(const V& src, int tw, int th, Sampler&& sample) {
  V out;
  out.scan_id = src.scan_id;
  out.width = tw;
  out.height = th;
  out.depth = src.depth;
  out.spacing = src.spacing;
  out.voxels.resize(static_cast<std::size_t>(tw) * static_cast<std::size_t>(th) *
                    static_cast<std::size_t>(src.depth));
  const AxisMap mx = build_axis_map(src.width, tw);
  const AxisMap my = build_axis_map(src.height, th);
  for (int z = 0; z < src.depth; ++z) {
    const auto in = src.slice(z);
    auto dst = out.slice(z);
    for (int y = 0; y < th; ++y) {
      for (int x = 0; x < tw; ++x) {
        dst[static_cast<std::size_t>(y) * static_cast<std::size_t>(tw) +
            static_cast<std::size_t>(x)] = sample(in, src.width, mx, my, x, y);
      }
    }
  }
  return out;
}

template <typename T>
double bilinear_at(std::span<const T> in, int w, const AxisMap& mx,
                   const AxisMap& my, int x, int y) {
  const std::size_t sx0 = static_cast<std::size_t>(mx.lo[static_cast<std::size_t>(x)]);
  const std::size_t sx1 = static_cast<std::size_t>(mx.hi[static_cast<std::size_t>(x)]);
  const std::size_t sy0 = static_cast<std::size_t>(my.lo[static_cast<std::size_t>(y)]);
  const std::size_t sy1 = static_cast<std::size_t>(my.hi[static_cast<std::size_t>(y)]);
  const double fx = mx.frac[static_cast<std::size_t>(x)];
  const double fy = my.frac[static_cast<std::size_t>(y)];
  const std::size_t sw = static_cast<std::size_t>(w);
  const double v00 = static_cast<double>(in[sy0 * sw + sx0]);
  const double v10 = static_cast<double>(in[sy0 * sw + sx1]);
  const double v01 = static_cast<double>(in[sy1 * sw + sx0]);
  const double v11 = static_cast<double>(in[sy1 * sw + sx1]);
  return v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) +
         v01 * (1.0 - fx) * fy + v11 * fx * fy;
}

}  // namespace

ScanVolume resize_to_standard(const ScanVolume& scan, int target_width,
                              int target_height) {
  check_resize_inputs(scan, target_width, target_height);
  return resize_slicewise(scan, target_width, target_height,
                          [](std::span<const std::int16_t> in, int w,
                             const AxisMap& mx, const AxisMap& my, int x,
                             int y) -> std::int16_t {
                            const double v = bilinear_at(in, w, mx, my, x, y);
                            return static_cast<std::int16_t>(std::llround(
                                std::clamp(v, kI16Min, kI16Max)));
                          });
}

NormalizedVolume resize_to_standard(const NormalizedVolume& norm,
                                    int target_width, int target_height) {
  check_resize_inputs(norm, target_width, target_height);
  return resize_slicewise(norm, target_width, target_height,
                          [](std::span<const float> in, int w,
                             const AxisMap& mx, const AxisMap& my, int x,
                             int y) -> float {
                            return static_cast<float>(
                                bilinear_at(in, w, mx, my, x, y));
                          });
}

MaskVolume resize_to_standard(const MaskVolume& mask, int target_width,
                              int target_height) {
  check_resize_inputs(mask, target_width, target_height);
  return resize_slicewise(
      mask, target_width, target_height,
      [](std::span<const std::uint8_t> in, int w, const AxisMap& mx,
         const AxisMap& my, int x, int y) -> std::uint8_t {
        const std::size_t sx =
            static_cast<std::size_t>(mx.nearest[static_cast<std::size_t>(x)]);
        const std::size_t sy =
            static_cast<std::size_t>(my.nearest[static_cast<std::size_t>(y)]);
        return in[sy * static_cast<std::size_t>(w) + sx];
      });
}

MaskVolume threshold_prob(const ProbVolume& prob, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgumentError("threshold must lie in [0, 1], got " +
                               std::to_string(threshold));
  }
  validate_geometry(prob);
  MaskVolume out;
  out.scan_id = prob.scan_id;
  out.width = prob.width;
  out.height = prob.height;
  out.depth = prob.depth;
  out.spacing = prob.spacing;
  out.voxels.resize(prob.voxels.size());
  for (std::size_t i = 0; i < prob.voxels.size(); ++i) {
    out.voxels[i] =
        static_cast<double>(prob.voxels[i]) >= threshold ? 1 : 0;
  }
  return out;
}

}  // namespace ctstack
