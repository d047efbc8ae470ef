#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ctstack::cli {

struct IngestOptions {
  std::string input_dir;
  std::string output_dir;
  std::string order = "auto";  // auto|instance|location|name
  std::string scan_id;         // default: input directory name
};
int cmd_ingest(const IngestOptions& opt);

struct SynthOptions {
  std::uint64_t seed = 7;
  int width = 128;
  int height = 128;
  int depth = 96;
  int lesions = 3;
  int lesion_hu_lo = -700;
  int lesion_hu_hi = -500;
  double radius_lo = 10.0;
  double radius_hi = 18.0;
  double noise_hu = 0.0;
  std::string output_dir;
};
int cmd_synth(const SynthOptions& opt);

struct StackOptions {
  std::string input_dir;
  std::string output_dir;
  int stack_size = 32;
  int overlap_slices = 0;
  std::optional<double> overlap_factor;  // alternative to overlap_slices
};
int cmd_stack(const StackOptions& opt);

/// Backend, window and threshold knobs shared by predict/bench/sweep.
struct BackendOptions {
  std::string backend;  // empty = mode default (2d: slice2d, 3d: threshold3d)
  double band_lo = 0.42;
  double band_hi = 0.58;
  int radius = 0;
  double instability_rate = 0.0;
  std::uint64_t instability_seed = 0;
  std::string external_cmd;
  double timeout_seconds = 300.0;
  double sleep_ms = 5.0;
  std::optional<double> window_center;
  std::optional<double> window_width;
  double threshold = 0.2;
  int workers = 1;
};

struct PredictOptions {
  std::string input_dir;
  std::string output_dir;
  std::string mode;  // 2d|3d
  int stack_size = 32;
  BackendOptions backend;
};
int cmd_predict(const PredictOptions& opt);

struct EvaluateOptions {
  std::string pred_dir;
  std::string truth_dir;
  std::string output_file;
  std::string timing_file;  // optional; embedded into the report
};
int cmd_evaluate(const EvaluateOptions& opt);

struct AreaPlotOptions {
  std::string mask_dir;
  std::string pred_dir;  // optional
  std::string csv_file;  // at least one of csv/svg
  std::string svg_file;
};
int cmd_areaplot(const AreaPlotOptions& opt);

struct BenchOptions {
  std::string input_dir;
  std::string output_file;
  std::string mode = "both";  // 2d|3d|both
  int stack_size = 32;
  int repetitions = 5;
  BackendOptions backend;
};
int cmd_bench(const BenchOptions& opt);

struct SweepOptions {
  std::string input_dir;
  std::string truth_dir;  // optional
  std::string output_dir;
  int stack_size = 32;
  std::vector<double> factors = {0.0, 0.375, 0.625};
  BackendOptions backend;
};
int cmd_sweep(const SweepOptions& opt);

}  // namespace ctstack::cli
