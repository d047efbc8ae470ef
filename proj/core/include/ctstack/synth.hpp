#pragma once

#include <cstdint>
#include <vector>

#include "ctstack/volume.hpp"

namespace ctstack {

struct Ellipsoid {
  double cx = 0.0, cy = 0.0, cz = 0.0;  // center, voxel coordinates
  double rx = 1.0, ry = 1.0, rz = 1.0;  // semi-axes, voxels
};

/// Deterministic CT-like phantom: a soft-tissue shell around a lung box
/// containing ellipsoidal lesions whose HU values fall in a known band.
struct PhantomSpec {
  std::uint64_t seed = 0;
  int width = 128;
  int height = 128;
  int depth = 96;
  int n_lesions = 3;
  int lesion_hu_lo = -700;  // ground-glass-like band
  int lesion_hu_hi = -500;
  int lung_hu = -900;
  int shell_hu = 40;
  int shell_margin = 6;   // soft-tissue border around the lung box (x, y)
  int lung_z_margin = 2;  // lung extent border along z
  double radius_lo = 10.0;  // sampled per axis, voxels
  double radius_hi = 18.0;
  double noise_hu = 0.0;  // additive uniform HU jitter; off by default
  std::vector<Ellipsoid> lesions;  // explicit placement; overrides sampling
};

struct Phantom {
  ScanVolume scan;
  MaskVolume mask;
  std::vector<Ellipsoid> lesions;
};

/// Deterministic in the seed; the mask is the union of lesion interiors and
/// every lesion lies strictly inside the lung region.
Phantom generate_phantom(const PhantomSpec& spec);

/// Window under which the default phantom separates lung, lesion band and
/// shell cleanly.
WindowSpec default_phantom_window();

}  // namespace ctstack
