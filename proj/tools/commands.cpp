#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "ctstack/dicom.hpp"
#include "ctstack/metrics.hpp"
#include "ctstack/plots.hpp"
#include "ctstack/segmenter.hpp"
#include "ctstack/stacker.hpp"
#include "ctstack/synth.hpp"
#include "ctstack/timing.hpp"
#include "ctstack/util.hpp"
#include "ctstack/volume_io.hpp"

#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctstack::cli {

namespace {

PipelineMode parse_mode(const std::string& mode) {
  if (mode == "2d") return PipelineMode::per_slice_2d;
  if (mode == "3d") return PipelineMode::stacked_3d;
  throw InvalidArgumentError("mode must be \"2d\" or \"3d\", got \"" + mode +
                             "\"");
}

BackendDescriptor resolve_backend(const BackendOptions& opt,
                                  PipelineMode mode) {
  BackendDescriptor desc;
  desc.mode = mode;
  std::string kind = opt.backend;
  if (kind.empty()) {
    kind = mode == PipelineMode::per_slice_2d ? "slice2d" : "threshold3d";
  }
  if (kind == "threshold3d") {
    desc.kind = BackendKind::threshold3d;
  } else if (kind == "slice2d") {
    desc.kind = BackendKind::slice2d;
  } else if (kind == "external") {
    if (opt.external_cmd.empty()) {
      throw InvalidArgumentError(
          "the external backend needs --external-cmd");
    }
    desc.kind = BackendKind::external;
  } else if (kind == "sleep") {
    desc.kind = BackendKind::sleep_stub;
  } else {
    throw InvalidArgumentError("unknown backend \"" + kind +
                               "\"; expected threshold3d, slice2d, external "
                               "or sleep");
  }
  desc.band = Band{opt.band_lo, opt.band_hi};
  desc.smooth_radius = opt.radius;
  desc.instability = InstabilitySpec{opt.instability_rate,
                                     opt.instability_seed};
  desc.external = ExternalSpec{opt.external_cmd, opt.timeout_seconds};
  desc.sleep_milliseconds = opt.sleep_ms;
  return desc;
}

WindowSpec resolve_window(const std::optional<WindowSpec>& meta_window,
                          const BackendOptions& opt) {
  if (opt.window_center && opt.window_width) {
    return WindowSpec{*opt.window_center, *opt.window_width};
  }
  if (opt.window_center || opt.window_width) {
    throw InvalidArgumentError(
        "pass both --window-center and --window-width, or neither");
  }
  if (meta_window) return *meta_window;
  throw InvalidArgumentError(
      "the scan carries no window metadata; pass --window-center and "
      "--window-width");
}

json backend_config_json(const BackendOptions& opt,
                         const BackendDescriptor& desc,
                         const WindowSpec& window) {
  return {{"backend", backend_kind_name(desc.kind)},
          {"band_lo", opt.band_lo},
          {"band_hi", opt.band_hi},
          {"radius", opt.radius},
          {"instability_rate", opt.instability_rate},
          {"instability_seed", opt.instability_seed},
          {"external_cmd", opt.external_cmd},
          {"timeout_seconds", opt.timeout_seconds},
          {"sleep_ms", opt.sleep_ms},
          {"window_center", window.center},
          {"window_width", window.width},
          {"threshold", opt.threshold},
          {"workers", opt.workers}};
}

std::string factor_label(double factor) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", factor);
  return buf;
}

std::string default_scan_id(const fs::path& dir) {
  const std::string name = dir.filename().string();
  return name.empty() ? dir.parent_path().filename().string() : name;
}

}  // namespace

int cmd_ingest(const IngestOptions& opt) {
  std::optional<OrderingKey> ordering;
  if (opt.order == "instance") {
    ordering = OrderingKey::instance_number;
  } else if (opt.order == "location") {
    ordering = OrderingKey::slice_location;
  } else if (opt.order == "name") {
    ordering = OrderingKey::filename;
  } else if (opt.order != "auto") {
    throw InvalidArgumentError(
        "--order must be auto, instance, location or name");
  }

  if (!fs::is_directory(opt.input_dir)) {
    throw FormatError("input is not a directory: " + opt.input_dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(opt.input_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw FormatError("no files to ingest in " + opt.input_dir);
  }

  ScanAssembly assembly;
  assembly.scan_id =
      opt.scan_id.empty() ? default_scan_id(opt.input_dir) : opt.scan_id;
  assembly.ordering = ordering;
  for (const fs::path& file : files) {
    const std::string bytes = read_file(file);
    try {
      SliceRecord record = parse_dicom_file(
          {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
      assembly.slices.push_back(
          {std::move(record), file.filename().string()});
    } catch (const Error& e) {
      throw FormatError(file.filename().string() + ": " + e.what());
    }
  }

  const AssembleResult result = assemble_scan(assembly);
  write_native(opt.output_dir, result.scan, result.window);

  json window_json = nullptr;
  if (result.window) {
    window_json = {{"center", result.window->center},
                   {"width", result.window->width}};
  }
  const json report = {
      {"scan_id", result.scan.scan_id},
      {"width", result.scan.width},
      {"height", result.scan.height},
      {"depth", result.scan.depth},
      {"ordering_used", ordering_key_name(result.ordering_used)},
      {"saturated_voxels", result.saturated_voxels},
      {"slices_defaulted_unsigned", result.slices_defaulted_unsigned},
      {"window", window_json}};
  write_file_atomic(fs::path(opt.output_dir) / "ingest_report.json",
                    report.dump(2) + "\n");

  const json config = {{"input", opt.input_dir},
                       {"output", opt.output_dir},
                       {"order", opt.order},
                       {"scan_id", assembly.scan_id}};
  write_manifest(fs::path(opt.output_dir) / "manifest.json",
                 make_manifest("ingest", config, {opt.input_dir}));

  std::cout << "assembled " << result.scan.depth << " slices ("
            << result.scan.width << "x" << result.scan.height
            << ", ordered by " << ordering_key_name(result.ordering_used)
            << ") into " << opt.output_dir << "\n";
  return 0;
}

int cmd_synth(const SynthOptions& opt) {
  PhantomSpec spec;
  spec.seed = opt.seed;
  spec.width = opt.width;
  spec.height = opt.height;
  spec.depth = opt.depth;
  spec.n_lesions = opt.lesions;
  spec.lesion_hu_lo = opt.lesion_hu_lo;
  spec.lesion_hu_hi = opt.lesion_hu_hi;
  spec.radius_lo = opt.radius_lo;
  spec.radius_hi = opt.radius_hi;
  spec.noise_hu = opt.noise_hu;

  const Phantom phantom = generate_phantom(spec);
  const fs::path out = opt.output_dir;
  write_native(out / "scan", phantom.scan, default_phantom_window());
  write_native(out / "mask", phantom.mask);

  const json config = {{"seed", opt.seed},
                       {"width", opt.width},
                       {"height", opt.height},
                       {"depth", opt.depth},
                       {"lesions", opt.lesions},
                       {"lesion_hu_lo", opt.lesion_hu_lo},
                       {"lesion_hu_hi", opt.lesion_hu_hi},
                       {"radius_lo", opt.radius_lo},
                       {"radius_hi", opt.radius_hi},
                       {"noise_hu", opt.noise_hu},
                       {"output", opt.output_dir}};
  write_manifest(out / "manifest.json", make_manifest("synth", config, {}));

  std::cout << "phantom " << phantom.scan.scan_id << ": " << opt.width << "x"
            << opt.height << "x" << opt.depth << ", "
            << phantom.lesions.size() << " lesion(s) -> " << opt.output_dir
            << "\n";
  return 0;
}

int cmd_stack(const StackOptions& opt) {
  StackParams params;
  params.stack_size = opt.stack_size;
  params.overlap_slices = opt.overlap_factor
                              ? overlap_from_factor(*opt.overlap_factor,
                                                    opt.stack_size)
                              : opt.overlap_slices;

  const VolumeMeta meta = read_meta(opt.input_dir);
  const StackPlan plan = plan_stacks(meta.depth, params);
  const fs::path out = opt.output_dir;
  fs::create_directories(out);

  auto slab_dir = [&](std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "slab_%04zu", k);
    return out / buf;
  };

  switch (meta.dtype) {
    case VoxelDtype::i16: {
      std::optional<WindowSpec> window;
      const ScanVolume scan = read_scan(opt.input_dir, &window);
      const auto slabs = slice_into_stacks(scan, plan);
      for (std::size_t k = 0; k < slabs.size(); ++k) {
        write_native(slab_dir(k), slabs[k].data, window);
      }
      break;
    }
    case VoxelDtype::u8: {
      const MaskVolume mask = read_mask(opt.input_dir);
      const auto slabs = slice_into_stacks(mask, plan);
      for (std::size_t k = 0; k < slabs.size(); ++k) {
        write_native(slab_dir(k), slabs[k].data);
      }
      break;
    }
    case VoxelDtype::f32: {
      const NormalizedVolume norm = read_normalized(opt.input_dir);
      const auto slabs = slice_into_stacks(norm, plan);
      for (std::size_t k = 0; k < slabs.size(); ++k) {
        write_native(slab_dir(k), slabs[k].data);
      }
      break;
    }
  }

  write_plan_json(out / "plan.json", plan);

  const json config = {{"input", opt.input_dir},
                       {"output", opt.output_dir},
                       {"stack_size", params.stack_size},
                       {"overlap_slices", params.overlap_slices},
                       {"overlap_factor", params.overlap_factor()}};
  write_manifest(out / "manifest.json",
                 make_manifest("stack", config, {opt.input_dir}));

  std::cout << meta.depth << " slices -> " << plan.entries.size()
            << " stacks (stride " << params.stride() << ", last pad "
            << plan.entries.back().pad << ")\n";
  return 0;
}

int cmd_predict(const PredictOptions& opt) {
  std::optional<WindowSpec> meta_window;
  const ScanVolume scan = read_scan(opt.input_dir, &meta_window);
  const WindowSpec window = resolve_window(meta_window, opt.backend);
  const PipelineMode mode = parse_mode(opt.mode);
  const BackendDescriptor desc = resolve_backend(opt.backend, mode);
  const StackParams params{opt.stack_size, 0};

  const PipelineResult result = run_pipeline(
      scan, window, desc, params, opt.backend.threshold, opt.backend.workers);

  const fs::path out = opt.output_dir;
  write_native(out / "prob", result.prob);
  write_native(out / "mask", result.mask);

  json config = backend_config_json(opt.backend, desc, window);
  config["input"] = opt.input_dir;
  config["output"] = opt.output_dir;
  config["mode"] = opt.mode;
  config["stack_size"] = opt.stack_size;
  config["overlap_slices"] = 0;

  const json report = {{"scan_id", scan.scan_id},
                       {"depth", scan.depth},
                       {"mode", pipeline_mode_name(mode)},
                       {"backend", backend_kind_name(desc.kind)},
                       {"stack_size", opt.stack_size},
                       {"threshold", opt.backend.threshold},
                       {"workers", opt.backend.workers},
                       {"backend_calls", result.backend_calls}};
  write_file_atomic(out / "report.json", report.dump(2) + "\n");
  write_manifest(out / "manifest.json",
                 make_manifest("predict", config, {opt.input_dir}));

  std::cout << "backend calls: " << result.backend_calls << "\n";
  std::cout << "wrote " << (out / "mask").string() << " and "
            << (out / "prob").string() << "\n";
  return 0;
}

namespace {

struct EvalVolumePair {
  std::string scan_id;
  fs::path pred;
  fs::path truth;
};

std::vector<EvalVolumePair> discover_pairs(const fs::path& pred_dir,
                                           const fs::path& truth_dir) {
  if (is_volume_dir(pred_dir)) {
    if (!is_volume_dir(truth_dir)) {
      throw FormatError("prediction is a single volume but truth is not: " +
                        truth_dir.string());
    }
    return {{read_meta(pred_dir).scan_id, pred_dir, truth_dir}};
  }
  if (!fs::is_directory(pred_dir)) {
    throw FormatError("prediction path is not a directory: " +
                      pred_dir.string());
  }
  std::vector<EvalVolumePair> pairs;
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (entry.is_directory() && is_volume_dir(entry.path())) {
      subdirs.push_back(entry.path());
    }
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& pred : subdirs) {
    const fs::path truth = truth_dir / pred.filename();
    if (!is_volume_dir(truth)) {
      throw FormatError("no matching truth volume for " +
                        pred.filename().string() + " under " +
                        truth_dir.string());
    }
    pairs.push_back({pred.filename().string(), pred, truth});
  }
  if (pairs.empty()) {
    throw FormatError("no prediction volumes found under " +
                      pred_dir.string());
  }
  return pairs;
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& opt) {
  const auto volume_pairs = discover_pairs(opt.pred_dir, opt.truth_dir);

  std::vector<MaskVolume> preds;
  std::vector<MaskVolume> truths;
  preds.reserve(volume_pairs.size());
  truths.reserve(volume_pairs.size());
  std::vector<EvalPair> pairs;
  for (const EvalVolumePair& p : volume_pairs) {
    preds.push_back(read_mask(p.pred));
    truths.push_back(read_mask(p.truth));
  }
  for (std::size_t i = 0; i < volume_pairs.size(); ++i) {
    pairs.push_back({volume_pairs[i].scan_id, &preds[i], &truths[i]});
  }

  EvalReport report = evaluate_pairs(pairs);
  if (!opt.timing_file.empty()) {
    report.timing_summary_json = read_file(opt.timing_file);
  }
  write_file_atomic(opt.output_file, eval_report_json(report));

  const json config = {{"pred", opt.pred_dir},
                       {"truth", opt.truth_dir},
                       {"out", opt.output_file},
                       {"timing", opt.timing_file}};
  std::vector<fs::path> inputs = {opt.pred_dir, opt.truth_dir};
  if (!opt.timing_file.empty()) inputs.push_back(opt.timing_file);
  write_manifest(opt.output_file + ".manifest.json",
                 make_manifest("evaluate", config, inputs));

  std::cout << "mean dice: " << report.mean_dice << " over "
            << report.scans.size() << " scan(s); prevalence "
            << report.prevalence << "\n";
  return 0;
}

int cmd_areaplot(const AreaPlotOptions& opt) {
  if (opt.csv_file.empty() && opt.svg_file.empty()) {
    throw InvalidArgumentError("pass --csv and/or --svg");
  }
  const MaskVolume mask = read_mask(opt.mask_dir);
  const AreaPlot truth = area_plot(mask);

  std::optional<AreaPlot> pred;
  if (!opt.pred_dir.empty()) {
    const MaskVolume pred_mask = read_mask(opt.pred_dir);
    require_same_geometry(mask, pred_mask, "areaplot");
    pred = area_plot(pred_mask);
  }

  const AreaPlot* pred_ptr = pred ? &*pred : nullptr;
  if (!opt.csv_file.empty()) {
    write_area_plot_csv(opt.csv_file, &truth, pred_ptr);
  }
  if (!opt.svg_file.empty()) {
    write_area_plot_svg(opt.svg_file, &truth, pred_ptr,
                        "area-plot: " + mask.scan_id);
  }

  const json config = {{"mask", opt.mask_dir},
                       {"pred", opt.pred_dir},
                       {"csv", opt.csv_file},
                       {"svg", opt.svg_file}};
  std::vector<fs::path> inputs = {opt.mask_dir};
  if (!opt.pred_dir.empty()) inputs.push_back(opt.pred_dir);
  const std::string anchor =
      !opt.csv_file.empty() ? opt.csv_file : opt.svg_file;
  write_manifest(anchor + ".manifest.json",
                 make_manifest("areaplot", config, inputs));

  std::cout << "area-plot for " << mask.scan_id << " ("
            << truth.ratios.size() << " slices)\n";
  return 0;
}

int cmd_bench(const BenchOptions& opt) {
  std::optional<WindowSpec> meta_window;
  const ScanVolume scan = read_scan(opt.input_dir, &meta_window);
  const WindowSpec window = resolve_window(meta_window, opt.backend);
  const StackParams params{opt.stack_size, 0};

  json config;
  std::string output_json;
  if (opt.mode == "both") {
    const BackendDescriptor desc_2d =
        resolve_backend(opt.backend, PipelineMode::per_slice_2d);
    const BackendDescriptor desc_3d =
        resolve_backend(opt.backend, PipelineMode::stacked_3d);
    const ModeComparison cmp =
        compare_modes(scan, window, desc_2d, desc_3d, params, opt.repetitions,
                      opt.backend.workers);
    output_json = mode_comparison_json(cmp);
    config = backend_config_json(opt.backend, desc_3d, window);
    std::cout << format_timing_table(cmp);
    std::cout << "call ratio 2D:3D = " << cmp.call_ratio << ", wall ratio = "
              << cmp.wall_ratio << "\n";
  } else {
    const PipelineMode mode = parse_mode(opt.mode);
    const BackendDescriptor desc = resolve_backend(opt.backend, mode);
    const TimingReport report = time_inference(
        scan, window, desc, params, opt.repetitions, opt.backend.workers);
    output_json = timing_report_json(report);
    config = backend_config_json(opt.backend, desc, window);
    std::cout << "mode " << pipeline_mode_name(mode) << ": "
              << report.backend_calls << " backend calls, wall "
              << report.wall_seconds << " s (median of " << opt.repetitions
              << ")\n";
  }
  write_file_atomic(opt.output_file, output_json);

  config["input"] = opt.input_dir;
  config["out"] = opt.output_file;
  config["mode"] = opt.mode;
  config["stack_size"] = opt.stack_size;
  config["repetitions"] = opt.repetitions;
  write_manifest(opt.output_file + ".manifest.json",
                 make_manifest("bench", config, {opt.input_dir}));
  return 0;
}

int cmd_sweep(const SweepOptions& opt) {
  std::optional<WindowSpec> meta_window;
  const ScanVolume scan = read_scan(opt.input_dir, &meta_window);
  const WindowSpec window = resolve_window(meta_window, opt.backend);

  std::optional<MaskVolume> truth;
  std::optional<AreaPlot> truth_plot;
  if (!opt.truth_dir.empty()) {
    truth = read_mask(opt.truth_dir);
    require_same_geometry(scan, *truth, "sweep truth");
    truth_plot = area_plot(*truth);
  }

  BackendOptions backend_opt = opt.backend;
  if (backend_opt.backend == "slice2d") {
    throw InvalidArgumentError(
        "the overlap sweep drives stacked 3D backends only");
  }
  const BackendDescriptor desc =
      resolve_backend(backend_opt, PipelineMode::stacked_3d);

  const NormalizedVolume norm = apply_window(scan, window);
  const fs::path out = opt.output_dir;
  fs::create_directories(out);

  json summary = json::array();
  for (double factor : opt.factors) {
    StackParams params;
    params.stack_size = opt.stack_size;
    params.overlap_slices = overlap_from_factor(factor, opt.stack_size);

    PipelineResult counters;
    const ProbVolume prob =
        predict_stacked(norm, desc, params, opt.backend.workers, &counters);
    const MaskVolume mask = threshold_prob(prob, opt.backend.threshold);
    const StackPlan plan = plan_stacks(scan.depth, params);

    const fs::path factor_dir = out / ("factor-" + factor_label(factor));
    write_plan_json(factor_dir / "plan.json", plan);
    write_native(factor_dir / "prob", prob);
    write_native(factor_dir / "mask", mask);

    const AreaPlot pred_plot = area_plot(mask);
    const AreaPlot* truth_ptr = truth_plot ? &*truth_plot : nullptr;
    write_area_plot_csv(factor_dir / "areaplot.csv", truth_ptr, &pred_plot);
    write_area_plot_svg(factor_dir / "areaplot.svg", truth_ptr, &pred_plot,
                        "overlap factor " + factor_label(factor) + ": " +
                            scan.scan_id);

    json entry = {{"factor", factor},
                  {"overlap_slices", params.overlap_slices},
                  {"stack_size", params.stack_size},
                  {"stacks", plan.entries.size()},
                  {"backend_calls", counters.backend_calls}};
    if (scan.depth >= 2) {
      entry["pred_continuity_tv"] = continuity_tv(pred_plot);
      if (truth_plot) entry["truth_continuity_tv"] = continuity_tv(*truth_plot);
    }
    if (truth) entry["dice"] = dice_score(mask, *truth);
    summary.push_back(entry);

    std::cout << "factor " << factor_label(factor) << ": overlap "
              << params.overlap_slices << ", " << plan.entries.size()
              << " stacks -> " << factor_dir.string() << "\n";
  }

  write_file_atomic(out / "sweep.json", summary.dump(2) + "\n");

  json config = backend_config_json(opt.backend, desc, window);
  config["input"] = opt.input_dir;
  config["truth"] = opt.truth_dir;
  config["output"] = opt.output_dir;
  config["stack_size"] = opt.stack_size;
  config["factors"] = opt.factors;
  std::vector<fs::path> inputs = {opt.input_dir};
  if (!opt.truth_dir.empty()) inputs.push_back(opt.truth_dir);
  write_manifest(out / "manifest.json",
                 make_manifest("sweep", config, inputs));
  return 0;
}

}  // namespace ctstack::cli
