#pragma once

#include <string>

#include "ctstack/segmenter.hpp"

namespace ctstack {

/// Wall-clock and call-count structure of one pipeline configuration.
/// Pipeline and backend-only times are reported separately.
struct TimingReport {
  PipelineMode mode = PipelineMode::stacked_3d;
  BackendKind backend = BackendKind::threshold3d;
  int scan_depth = 0;  // N
  int stack_size = 0;  // S
  int backend_calls = 0;
  int repetitions = 1;
  int workers = 1;
  double wall_seconds = 0.0;     // median pipeline wall over repetitions
  double backend_seconds = 0.0;  // median summed backend time over repetitions
  double call_mean_seconds = 0.0;
  double call_min_seconds = 0.0;
  double call_max_seconds = 0.0;
};

/// Runs the pipeline `repetitions` times on a monotonic clock and reports
/// the median. Backend calls are serialized when workers == 1 so per-call
/// statistics stay meaningful.
TimingReport time_inference(const ScanVolume& scan, const WindowSpec& window,
                            const BackendDescriptor& backend,
                            const StackParams& params, int repetitions,
                            int workers = 1);

struct ModeComparison {
  TimingReport two_d;
  TimingReport three_d;
  double call_ratio = 0.0;  // 2D calls / 3D calls
  double wall_ratio = 0.0;  // 2D wall / 3D wall
};

ModeComparison compare_modes(const ScanVolume& scan, const WindowSpec& window,
                             const BackendDescriptor& backend_2d,
                             const BackendDescriptor& backend_3d,
                             const StackParams& params, int repetitions,
                             int workers = 1);

std::string timing_report_json(const TimingReport& report);
std::string mode_comparison_json(const ModeComparison& comparison);

/// Technique/time rows in the two-row comparison layout.
std::string format_timing_table(const ModeComparison& comparison);

}  // namespace ctstack
