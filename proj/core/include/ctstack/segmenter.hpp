#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctstack/stacker.hpp"
#include "ctstack/volume.hpp"

namespace ctstack {

// Segmentation backends. The built-in backends are deterministic reference
// segmenters that reproduce the qualitative 2D-vs-3D pipeline behavior;
// real trained models attach through the external-process protocol:
//   <command> --in <volume-dir> --out <volume-dir>
// with an f32 normalized volume in and an f32 probability volume of
// identical geometry out, exit 0 on success.

enum class BackendKind {
  threshold3d,  // in-band fraction over 3D box neighborhoods
  slice2d,      // per-slice 2D variant with seeded slice dropouts
  external,     // external process speaking the volume-dir protocol
  sleep_stub,   // constant per-call delay; timing-harness calibration
};

enum class PipelineMode { per_slice_2d, stacked_3d };

std::string backend_kind_name(BackendKind kind);
std::string pipeline_mode_name(PipelineMode mode);

/// Intensity band on windowed values, inclusive on both ends.
struct Band {
  double lo = 0.0;
  double hi = 1.0;
};

struct InstabilitySpec {
  double rate = 0.0;  // probability a slice's scores are zeroed
  std::uint64_t seed = 0;
};

struct ExternalSpec {
  std::string command;  // whitespace-split into argv; no shell
  double timeout_seconds = 300.0;
};

struct BackendDescriptor {
  BackendKind kind = BackendKind::threshold3d;
  PipelineMode mode = PipelineMode::stacked_3d;
  Band band;
  int smooth_radius = 0;
  InstabilitySpec instability;
  ExternalSpec external;
  double sleep_milliseconds = 5.0;  // sleep_stub only
};

inline constexpr int kMaxSmoothRadius = 3;

/// Score = fraction of the (2r+1)^3 box neighborhood (clamp-to-edge
/// sampling) whose value lies inside the band. Radius 0 is the exact
/// band indicator.
ProbVolume segment_threshold3d(const NormalizedVolume& slab, const Band& band,
                               int smooth_radius);

/// 2D counterpart over (2r+1)^2 in-plane neighborhoods. With probability
/// `rate`, decided by a hash of (seed, scan_id, slice_index), the whole
/// slice's scores are zeroed, modeling independent per-slice failures.
ProbVolume segment_slice2d(const NormalizedVolume& slice, const Band& band,
                           int smooth_radius, const InstabilitySpec& instability,
                           int slice_index);

/// The dropout decision used by segment_slice2d.
bool slice_zeroed(std::uint64_t seed, std::string_view scan_id,
                  int slice_index, double rate);

/// Round-trips the slab through an external program's workspace.
ProbVolume segment_external(const NormalizedVolume& slab,
                            const ExternalSpec& spec);

struct PipelineResult {
  ProbVolume prob;
  MaskVolume mask;
  int backend_calls = 0;
  std::vector<double> call_seconds;
  double backend_seconds = 0.0;   // sum of call_seconds
  double pipeline_seconds = 0.0;  // wall clock, window through threshold
};

/// Stack-based prediction with the overlap the params ask for; overlapped
/// slices are averaged at reassembly. Used directly by overlap sweeps.
ProbVolume predict_stacked(const NormalizedVolume& norm,
                           const BackendDescriptor& backend,
                           const StackParams& params, int workers,
                           PipelineResult* timing = nullptr);

/// Window -> backend calls (per slice in 2D mode; per zero-overlap stack in
/// 3D mode) -> threshold. Inference always stacks without overlap.
PipelineResult run_pipeline(const ScanVolume& scan, const WindowSpec& window,
                            const BackendDescriptor& backend,
                            const StackParams& params, double threshold,
                            int workers = 1);

}  // namespace ctstack
