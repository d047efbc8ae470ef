#include "ctstack/timing.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "ctstack/util.hpp"

using nlohmann::json;

namespace ctstack {

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json report_to_json(const TimingReport& r) {
  return {{"mode", pipeline_mode_name(r.mode)},
          {"backend", backend_kind_name(r.backend)},
          {"scan_depth", r.scan_depth},
          {"stack_size", r.stack_size},
          {"backend_calls", r.backend_calls},
          {"repetitions", r.repetitions},
          {"workers", r.workers},
          {"wall_seconds", r.wall_seconds},
          {"backend_seconds", r.backend_seconds},
          {"call_mean_seconds", r.call_mean_seconds},
          {"call_min_seconds", r.call_min_seconds},
          {"call_max_seconds", r.call_max_seconds}};
}

std::string seconds_string(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace

TimingReport time_inference(const ScanVolume& scan, const WindowSpec& window,
                            const BackendDescriptor& backend,
                            const StackParams& params, int repetitions,
                            int workers) {
  if (repetitions < 1) {
    throw InvalidArgumentError("repetitions must be at least 1");
  }

  std::vector<double> walls;
  std::vector<double> backend_totals;
  std::vector<double> all_calls;
  int calls = 0;

  for (int rep = 0; rep < repetitions; ++rep) {
    const PipelineResult run = run_pipeline(scan, window, backend, params,
                                            kDefaultThreshold, workers);
    walls.push_back(run.pipeline_seconds);
    backend_totals.push_back(run.backend_seconds);
    all_calls.insert(all_calls.end(), run.call_seconds.begin(),
                     run.call_seconds.end());
    calls = run.backend_calls;
  }

  TimingReport report;
  report.mode = backend.mode;
  report.backend = backend.kind;
  report.scan_depth = scan.depth;
  report.stack_size = params.stack_size;
  report.backend_calls = calls;
  report.repetitions = repetitions;
  report.workers = workers;
  report.wall_seconds = median(walls);
  report.backend_seconds = median(backend_totals);
  if (!all_calls.empty()) {
    report.call_mean_seconds =
        std::accumulate(all_calls.begin(), all_calls.end(), 0.0) /
        static_cast<double>(all_calls.size());
    report.call_min_seconds =
        *std::min_element(all_calls.begin(), all_calls.end());
    report.call_max_seconds =
        *std::max_element(all_calls.begin(), all_calls.end());
  }
  return report;
}

ModeComparison compare_modes(const ScanVolume& scan, const WindowSpec& window,
                             const BackendDescriptor& backend_2d,
                             const BackendDescriptor& backend_3d,
                             const StackParams& params, int repetitions,
                             int workers) {
  if (backend_2d.mode != PipelineMode::per_slice_2d ||
      backend_3d.mode != PipelineMode::stacked_3d) {
    throw InvalidArgumentError(
        "compare_modes expects a per-slice 2D and a stacked 3D descriptor");
  }
  ModeComparison cmp;
  cmp.two_d = time_inference(scan, window, backend_2d, params, repetitions,
                             workers);
  cmp.three_d = time_inference(scan, window, backend_3d, params, repetitions,
                               workers);
  cmp.call_ratio = static_cast<double>(cmp.two_d.backend_calls) /
                   static_cast<double>(cmp.three_d.backend_calls);
  cmp.wall_ratio = cmp.two_d.wall_seconds / cmp.three_d.wall_seconds;
  return cmp;
}

std::string timing_report_json(const TimingReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

std::string mode_comparison_json(const ModeComparison& comparison) {
  const json j = {{"2d", report_to_json(comparison.two_d)},
                  {"3d", report_to_json(comparison.three_d)},
                  {"call_ratio", comparison.call_ratio},
                  {"wall_ratio", comparison.wall_ratio}};
  return j.dump(2) + "\n";
}

std::string format_timing_table(const ModeComparison& comparison) {
  return format_comparison_table(
      {"Technique", "Wall seconds", "Backend seconds", "Backend calls"},
      {{"2D", seconds_string(comparison.two_d.wall_seconds),
        seconds_string(comparison.two_d.backend_seconds),
        std::to_string(comparison.two_d.backend_calls)},
       {"3D", seconds_string(comparison.three_d.wall_seconds),
        seconds_string(comparison.three_d.backend_seconds),
        std::to_string(comparison.three_d.backend_calls)}});
}

}  // namespace ctstack
