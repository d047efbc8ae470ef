#include "ctstack/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ctstack/util.hpp"

namespace ctstack {

namespace {

struct LungBox {
  double x0, x1, y0, y1, z0, z1;  // half-open voxel bounds
};

LungBox lung_box(const PhantomSpec& spec) {
  return {static_cast<double>(spec.shell_margin),
          static_cast<double>(spec.width - spec.shell_margin),
          static_cast<double>(spec.shell_margin),
          static_cast<double>(spec.height - spec.shell_margin),
          static_cast<double>(spec.lung_z_margin),
          static_cast<double>(spec.depth - spec.lung_z_margin)};
}

}  // namespace

WindowSpec default_phantom_window() { return WindowSpec{-600.0, 1500.0}; }

Phantom generate_phantom(const PhantomSpec& spec) {
  if (spec.depth < 4) {
    throw InvalidArgumentError("phantom depth must be at least 4 slices");
  }
  if (spec.width < 2 * spec.shell_margin + 4 ||
      spec.height < 2 * spec.shell_margin + 4) {
    throw InvalidArgumentError(
        "phantom cross-section too small for the soft-tissue shell");
  }
  if (spec.lesion_hu_lo > spec.lesion_hu_hi) {
    throw InvalidArgumentError("lesion HU band is inverted");
  }
  if (spec.lesions.empty()) {
    if (spec.n_lesions < 0) {
      throw InvalidArgumentError("lesion count must be non-negative");
    }
    if (!(spec.radius_lo > 0.0) || spec.radius_lo > spec.radius_hi) {
      throw InvalidArgumentError("lesion radius range is invalid");
    }
  }

  const LungBox lung = lung_box(spec);
  Rng rng(spec.seed);

  std::vector<Ellipsoid> lesions = spec.lesions;
  if (lesions.empty() && spec.n_lesions > 0) {
    // Radii capped so the lesion can always be placed strictly inside the
    // lung region; a minimum radius that cannot fit is a rejected spec.
    const double max_rx = (lung.x1 - lung.x0) / 2.0 - 1.5;
    const double max_ry = (lung.y1 - lung.y0) / 2.0 - 1.5;
    const double max_rz = (lung.z1 - lung.z0) / 2.0 - 1.5;
    if (spec.radius_lo > max_rx || spec.radius_lo > max_ry ||
        spec.radius_lo > max_rz) {
      throw InvalidArgumentError(
          "minimum lesion radius does not fit inside the lung region");
    }
    for (int i = 0; i < spec.n_lesions; ++i) {
      Ellipsoid e;
      e.rx = rng.uniform(spec.radius_lo, std::min(spec.radius_hi, max_rx));
      e.ry = rng.uniform(spec.radius_lo, std::min(spec.radius_hi, max_ry));
      e.rz = rng.uniform(spec.radius_lo, std::min(spec.radius_hi, max_rz));
      e.cx = rng.uniform(lung.x0 + e.rx + 1.0, lung.x1 - e.rx - 1.0);
      e.cy = rng.uniform(lung.y0 + e.ry + 1.0, lung.y1 - e.ry - 1.0);
      e.cz = rng.uniform(lung.z0 + e.rz + 1.0, lung.z1 - e.rz - 1.0);
      lesions.push_back(e);
    }
  }
  for (const Ellipsoid& e : lesions) {
    if (!(e.rx > 0.0 && e.ry > 0.0 && e.rz > 0.0)) {
      throw InvalidArgumentError("lesion radii must be positive");
    }
    if (e.cx - e.rx < lung.x0 || e.cx + e.rx > lung.x1 - 1.0 ||
        e.cy - e.ry < lung.y0 || e.cy + e.ry > lung.y1 - 1.0 ||
        e.cz - e.rz < lung.z0 || e.cz + e.rz > lung.z1 - 1.0) {
      throw InvalidArgumentError("lesion placement leaves the lung region");
    }
  }

  Phantom phantom;
  phantom.lesions = lesions;
  phantom.scan = make_volume<ScanVolume>(
      "phantom-" + std::to_string(spec.seed), spec.width, spec.height,
      spec.depth, static_cast<std::int16_t>(spec.shell_hu));
  phantom.mask = make_volume<MaskVolume>(phantom.scan.scan_id, spec.width,
                                         spec.height, spec.depth, 0);

  ScanVolume& scan = phantom.scan;
  MaskVolume& mask = phantom.mask;

  for (int z = 0; z < spec.depth; ++z) {
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        if (x >= lung.x0 && x < lung.x1 && y >= lung.y0 && y < lung.y1 &&
            z >= lung.z0 && z < lung.z1) {
          scan.at(x, y, z) = static_cast<std::int16_t>(spec.lung_hu);
        }
      }
    }
  }

  for (const Ellipsoid& e : lesions) {
    const int x_lo = std::max(0, static_cast<int>(std::floor(e.cx - e.rx)));
    const int x_hi =
        std::min(spec.width - 1, static_cast<int>(std::ceil(e.cx + e.rx)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(e.cy - e.ry)));
    const int y_hi =
        std::min(spec.height - 1, static_cast<int>(std::ceil(e.cy + e.ry)));
    const int z_lo = std::max(0, static_cast<int>(std::floor(e.cz - e.rz)));
    const int z_hi =
        std::min(spec.depth - 1, static_cast<int>(std::ceil(e.cz + e.rz)));
    for (int z = z_lo; z <= z_hi; ++z) {
      for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
          const double dx = (x - e.cx) / e.rx;
          const double dy = (y - e.cy) / e.ry;
          const double dz = (z - e.cz) / e.rz;
          if (dx * dx + dy * dy + dz * dz <= 1.0) {
            mask.at(x, y, z) = 1;
          }
        }
      }
    }
  }

  // Lesion texture: per-voxel HU drawn from the band, in storage order so
  // the result is independent of lesion overlap order.
  for (std::size_t i = 0; i < mask.voxels.size(); ++i) {
    if (mask.voxels[i]) {
      scan.voxels[i] = static_cast<std::int16_t>(
          rng.uniform_int(spec.lesion_hu_lo, spec.lesion_hu_hi));
    }
  }

  if (spec.noise_hu > 0.0) {
    for (std::size_t i = 0; i < scan.voxels.size(); ++i) {
      const double jitter = rng.uniform(-spec.noise_hu, spec.noise_hu);
      const double v =
          std::clamp(static_cast<double>(scan.voxels[i]) + jitter, -32768.0,
                     32767.0);
      scan.voxels[i] = static_cast<std::int16_t>(std::llround(v));
    }
  }

  return phantom;
}

}  // namespace ctstack
