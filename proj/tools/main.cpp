#include <exception>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "ctstack/errors.hpp"
#include "ctstack/util.hpp"
#include "commands.hpp"

namespace cli = ctstack::cli;

namespace {

void add_backend_options(CLI::App* cmd, cli::BackendOptions& opt,
                         bool with_backend_kind = true) {
  if (with_backend_kind) {
    cmd->add_option("--backend", opt.backend,
                    "Backend kind: threshold3d, slice2d, external or sleep "
                    "(default depends on the mode)");
  }
  cmd->add_option("--band-lo", opt.band_lo,
                  "Lower edge of the windowed intensity band");
  cmd->add_option("--band-hi", opt.band_hi,
                  "Upper edge of the windowed intensity band");
  cmd->add_option("--radius", opt.radius, "Box smoothing radius (0-3)");
  cmd->add_option("--instability-rate", opt.instability_rate,
                  "slice2d: probability a slice's scores are zeroed");
  cmd->add_option("--instability-seed", opt.instability_seed,
                  "slice2d: dropout seed");
  cmd->add_option("--external-cmd", opt.external_cmd,
                  "external: program invoked as <cmd> --in <dir> --out <dir>");
  cmd->add_option("--timeout", opt.timeout_seconds,
                  "external: per-call timeout in seconds");
  cmd->add_option("--sleep-ms", opt.sleep_ms,
                  "sleep: constant per-call delay in milliseconds");
  cmd->add_option("--window-center", opt.window_center,
                  "Window center in HU (overrides scan metadata)");
  cmd->add_option("--window-width", opt.window_width,
                  "Window width in HU (overrides scan metadata)");
  cmd->add_option("--threshold", opt.threshold,
                  "Probability threshold for the predicted mask");
  cmd->add_option("--workers", opt.workers,
                  "Worker threads for backend calls");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CT stack-based segmentation pipeline toolkit"};
  app.set_version_flag("--version", std::string(ctstack::kToolVersion));
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  cli::IngestOptions ingest;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Assemble a DICOM directory into a volume");
  ingest_cmd->add_option("--in", ingest.input_dir, "DICOM directory")
      ->required();
  ingest_cmd->add_option("--out", ingest.output_dir, "Output volume directory")
      ->required();
  ingest_cmd->add_option("--order", ingest.order,
                         "Slice ordering: auto, instance, location or name");
  ingest_cmd->add_option("--scan-id", ingest.scan_id,
                         "Scan identity (default: input directory name)");

  cli::SynthOptions synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic phantom scan + mask");
  synth_cmd->add_option("--seed", synth.seed, "Phantom seed");
  synth_cmd->add_option("--width", synth.width, "Voxels along x");
  synth_cmd->add_option("--height", synth.height, "Voxels along y");
  synth_cmd->add_option("--depth", synth.depth, "Slices along z");
  synth_cmd->add_option("--lesions", synth.lesions, "Number of lesions");
  synth_cmd->add_option("--lesion-lo", synth.lesion_hu_lo,
                        "Lesion band lower HU");
  synth_cmd->add_option("--lesion-hi", synth.lesion_hu_hi,
                        "Lesion band upper HU");
  synth_cmd->add_option("--radius-lo", synth.radius_lo,
                        "Minimum lesion semi-axis (voxels)");
  synth_cmd->add_option("--radius-hi", synth.radius_hi,
                        "Maximum lesion semi-axis (voxels)");
  synth_cmd->add_option("--noise", synth.noise_hu,
                        "Additive uniform HU jitter (default off)");
  synth_cmd->add_option("--out", synth.output_dir, "Output directory")
      ->required();

  cli::StackOptions stack;
  CLI::App* stack_cmd =
      app.add_subcommand("stack", "Split a volume into overlapping stacks");
  stack_cmd->add_option("--in", stack.input_dir, "Input volume directory")
      ->required();
  stack_cmd->add_option("--out", stack.output_dir, "Output directory")
      ->required();
  stack_cmd->add_option("--stack-size", stack.stack_size, "Slices per stack");
  auto* overlap_slices_opt = stack_cmd->add_option(
      "--overlap-slices", stack.overlap_slices, "Overlapping slices");
  stack_cmd
      ->add_option("--overlap-factor", stack.overlap_factor,
                   "Overlap as a factor of the stack size")
      ->excludes(overlap_slices_opt);

  cli::PredictOptions predict;
  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "Segment a scan with a 2D or 3D pipeline backend");
  predict_cmd->add_option("--in", predict.input_dir, "Scan volume directory")
      ->required();
  predict_cmd->add_option("--out", predict.output_dir, "Output directory")
      ->required();
  predict_cmd->add_option("--mode", predict.mode, "2d or 3d")->required();
  predict_cmd->add_option("--stack-size", predict.stack_size,
                          "Slices per stack (3d mode)");
  add_backend_options(predict_cmd, predict.backend);

  cli::EvaluateOptions evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Dice/continuity report for predictions against truth");
  evaluate_cmd->add_option("--pred", evaluate.pred_dir,
                           "Predicted mask volume (or directory of volumes)")
      ->required();
  evaluate_cmd->add_option("--truth", evaluate.truth_dir,
                           "Truth mask volume (or directory of volumes)")
      ->required();
  evaluate_cmd->add_option("--out", evaluate.output_file, "Report JSON path")
      ->required();
  evaluate_cmd->add_option("--timing", evaluate.timing_file,
                           "Optional timing JSON to embed in the report");

  cli::AreaPlotOptions areaplot;
  CLI::App* areaplot_cmd = app.add_subcommand(
      "areaplot", "Per-slice area-ratio CSV/SVG for a mask volume");
  areaplot_cmd->add_option("--mask", areaplot.mask_dir,
                           "Truth mask volume directory")
      ->required();
  areaplot_cmd->add_option("--pred", areaplot.pred_dir,
                           "Optional predicted mask volume directory");
  areaplot_cmd->add_option("--csv", areaplot.csv_file, "CSV output path");
  areaplot_cmd->add_option("--svg", areaplot.svg_file, "SVG output path");

  cli::BenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Inference wall-clock and call-count harness");
  bench_cmd->add_option("--in", bench.input_dir, "Scan volume directory")
      ->required();
  bench_cmd->add_option("--out", bench.output_file, "Timing JSON path")
      ->required();
  bench_cmd->add_option("--mode", bench.mode, "2d, 3d or both");
  bench_cmd->add_option("--stack-size", bench.stack_size, "Slices per stack");
  bench_cmd->add_option("--reps", bench.repetitions,
                        "Repetitions; the median is reported");
  add_backend_options(bench_cmd, bench.backend);

  cli::SweepOptions sweep;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Predict + area-plot across overlap factors");
  sweep_cmd->add_option("--in", sweep.input_dir, "Scan volume directory")
      ->required();
  sweep_cmd->add_option("--truth", sweep.truth_dir,
                        "Optional truth mask volume directory");
  sweep_cmd->add_option("--out", sweep.output_dir, "Output directory")
      ->required();
  sweep_cmd->add_option("--stack-size", sweep.stack_size, "Slices per stack");
  sweep_cmd->add_option("--factors", sweep.factors,
                        "Overlap factors to sweep");
  add_backend_options(sweep_cmd, sweep.backend);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest_cmd->parsed()) return cli::cmd_ingest(ingest);
    if (synth_cmd->parsed()) return cli::cmd_synth(synth);
    if (stack_cmd->parsed()) return cli::cmd_stack(stack);
    if (predict_cmd->parsed()) return cli::cmd_predict(predict);
    if (evaluate_cmd->parsed()) return cli::cmd_evaluate(evaluate);
    if (areaplot_cmd->parsed()) return cli::cmd_areaplot(areaplot);
    if (bench_cmd->parsed()) return cli::cmd_bench(bench);
    if (sweep_cmd->parsed()) return cli::cmd_sweep(sweep);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const ctstack::BackendFailureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.diagnostics().empty()) {
      std::cerr << "backend output:\n" << e.diagnostics() << "\n";
    }
    return 3;
  } catch (const ctstack::InvalidArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ctstack::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
