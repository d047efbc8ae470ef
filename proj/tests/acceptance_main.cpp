// Acceptance suite: every criterion prints one [PASS]/[FAIL] line and the
// binary exits nonzero if any failed. Tolerances are pinned in code.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctstack/dicom.hpp"
#include "ctstack/metrics.hpp"
#include "ctstack/segmenter.hpp"
#include "ctstack/stacker.hpp"
#include "ctstack/synth.hpp"
#include "ctstack/timing.hpp"
#include "ctstack/util.hpp"
#include "ctstack/volume_io.hpp"

#include "support/dicom_fixture.hpp"
#include "support/testutil.hpp"

using namespace ctstack;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int number, const std::string& name, Fn&& fn) {
  try {
    std::string detail;
    const bool pass = fn(detail);
    report(number, name, pass, detail);
  } catch (const std::exception& e) {
    report(number, name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- criterion 1: stack-plan fidelity -------------------------------------

bool stack_plan_fidelity(std::string& detail) {
  plan_stacks(601, {32, 20});  // warm up before timing

  const auto t0 = std::chrono::steady_clock::now();
  const StackPlan overlapped = plan_stacks(601, {32, 20});
  const StackPlan plain = plan_stacks(601, {32, 0});
  const double elapsed = seconds_since(t0);

  bool ok = overlapped.entries.size() == 49;
  ok = ok && overlapped.entries[0].start == 0 &&
       overlapped.entries[0].pad == 0;
  ok = ok && (overlapped.entries[1].start - overlapped.entries[0].start) == 12;
  ok = ok && overlapped.entries.back().start == 576 &&
       overlapped.entries.back().pad == 7;
  ok = ok && plain.entries.size() == 19 && plain.entries.back().pad == 7;
  ok = ok && elapsed < 1e-3;
  detail = "49/" + std::to_string(plain.entries.size()) + " entries, " +
           fmt(elapsed * 1e3) + " ms";
  return ok;
}

// ---- criterion 2: round-trip losslessness ----------------------------------

bool round_trip_losslessness(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  long long cases = 0;
  for (int total = 1; total <= 200; ++total) {
    Rng rng(static_cast<std::uint64_t>(total));
    const auto random_volume = testutil::random_prob(rng, 2, 2, total);
    const auto constant_volume = make_volume<ProbVolume>("c", 2, 2, total,
                                                         0.3f);
    for (int stack = 1; stack <= 48; ++stack) {
      for (int overlap = 0; overlap < stack; ++overlap) {
        const StackPlan plan = plan_stacks(total, {stack, overlap});
        const ProbVolume& volume =
            overlap == 0 ? random_volume : constant_volume;
        const ProbVolume back =
            reassemble(slice_into_stacks(volume, plan), plan);
        ++cases;
        if (back.voxels != volume.voxels) {
          detail = "mismatch at N=" + std::to_string(total) +
                   " S=" + std::to_string(stack) +
                   " O=" + std::to_string(overlap);
          return false;
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  detail = std::to_string(cases) + " cases in " + fmt(elapsed) + " s";
  return elapsed < 60.0;
}

// ---- criterion 3: dice oracle equivalence ----------------------------------

bool dice_oracle_equivalence(std::string& detail) {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = rng.uniform_int(1, 8);
    const int h = rng.uniform_int(1, 8);
    const int d = rng.uniform_int(1, 8);
    const auto a = testutil::random_mask(rng, w, h, d, rng.uniform());
    const auto b = testutil::random_mask(rng, w, h, d, rng.uniform());
    const double fast = dice_score(a, b);
    const double brute = testutil::dice_brute(a, b);
    worst = std::max(worst, std::abs(fast - brute));
    if (std::abs(fast - brute) > 1e-12) {
      detail = "oracle gap " + fmt(std::abs(fast - brute));
      return false;
    }
    if (fast != dice_score(b, a)) {
      detail = "asymmetric at trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "1000 pairs, worst gap " + fmt(worst);
  return true;
}

// ---- criterion 4: area-plot correctness ------------------------------------

bool area_plot_correctness(std::string& detail) {
  Rng rng(5150);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mask =
        testutil::random_mask(rng, 5, 4, rng.uniform_int(1, 16), 0.08);
    const AreaPlot plot = area_plot(mask);
    const bool any = std::any_of(mask.voxels.begin(), mask.voxels.end(),
                                 [](std::uint8_t v) { return v != 0; });
    const double peak =
        *std::max_element(plot.normalized.begin(), plot.normalized.end());
    if (any && peak != 1.0) {
      detail = "positive mask normalized peak " + fmt(peak);
      return false;
    }
    if (!any && peak != 0.0) {
      detail = "empty mask normalized peak " + fmt(peak);
      return false;
    }
  }

  auto mask = make_volume<MaskVolume>("m", 512, 512, 4, 0);
  const std::size_t counts[] = {0, 131072, 262144, 65536};
  for (int z = 0; z < 4; ++z) {
    auto s = mask.slice(z);
    std::fill(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(counts[z]),
              1);
  }
  const AreaPlot plot = area_plot(mask);
  const double expected_ratio[] = {0.0, 0.5, 1.0, 0.25};
  for (int z = 0; z < 4; ++z) {
    if (plot.ratios[static_cast<std::size_t>(z)] != expected_ratio[z] ||
        plot.normalized[static_cast<std::size_t>(z)] != expected_ratio[z]) {
      detail = "hand-counted example mismatch at slice " + std::to_string(z);
      return false;
    }
  }

  AreaPlot constant;
  constant.normalized = {0.4, 0.4, 0.4};
  AreaPlot alternating;
  alternating.normalized = {0.0, 1.0, 0.0, 1.0};
  AreaPlot ramp;
  ramp.normalized = {0.0, 0.5, 1.0};
  if (continuity_tv(constant) != 0.0 || continuity_tv(alternating) != 3.0 ||
      continuity_tv(ramp) != 1.0) {
    detail = "continuity hand examples mismatch";
    return false;
  }
  detail = "normalization, hand counts and variation examples exact";
  return true;
}

// ---- criterion 5: continuity ordering (2D vs 3D) ---------------------------

bool continuity_ordering(std::string& detail) {
  int ordered = 0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    PhantomSpec spec;
    spec.seed = static_cast<std::uint64_t>(s);
    spec.width = 48;
    spec.height = 48;
    spec.depth = 64;
    spec.shell_margin = 5;
    spec.n_lesions = 3;
    spec.radius_lo = 5.0;
    spec.radius_hi = 10.0;
    const Phantom phantom = generate_phantom(spec);
    const WindowSpec window = default_phantom_window();

    const double lo =
        static_cast<double>(static_cast<float>(window_value(-700.0, window)));
    const double hi =
        static_cast<double>(static_cast<float>(window_value(-500.0, window)));

    BackendDescriptor backend_3d;
    backend_3d.kind = BackendKind::threshold3d;
    backend_3d.mode = PipelineMode::stacked_3d;
    backend_3d.band = Band{lo, hi};
    backend_3d.smooth_radius = 1;

    BackendDescriptor backend_2d = backend_3d;
    backend_2d.kind = BackendKind::slice2d;
    backend_2d.mode = PipelineMode::per_slice_2d;
    backend_2d.instability = InstabilitySpec{0.25,
                                             static_cast<std::uint64_t>(s)};

    const PipelineResult r3 = run_pipeline(phantom.scan, window, backend_3d,
                                           {32, 0}, kDefaultThreshold);
    const PipelineResult r2 = run_pipeline(phantom.scan, window, backend_2d,
                                           {32, 0}, kDefaultThreshold);
    const double tv3 = continuity_tv(area_plot(r3.mask));
    const double tv2 = continuity_tv(area_plot(r2.mask));
    if (tv3 < tv2) ++ordered;
  }
  detail = std::to_string(ordered) + "/" + std::to_string(seeds) +
           " seeds with TV(3D) < TV(2D)";
  return ordered >= 19;
}

// ---- criterion 6: phantom dice ----------------------------------------------

bool phantom_dice(std::string& detail) {
  PhantomSpec spec;
  spec.seed = 11;
  spec.width = 64;
  spec.height = 64;
  spec.depth = 48;
  spec.shell_margin = 6;
  spec.n_lesions = 2;
  spec.radius_lo = 10.0;
  spec.radius_hi = 14.0;
  const Phantom phantom = generate_phantom(spec);
  const WindowSpec window = default_phantom_window();

  const double lo =
      static_cast<double>(static_cast<float>(window_value(-700.0, window)));
  const double hi =
      static_cast<double>(static_cast<float>(window_value(-500.0, window)));

  BackendDescriptor backend;
  backend.kind = BackendKind::threshold3d;
  backend.mode = PipelineMode::stacked_3d;
  backend.band = Band{lo, hi};

  backend.smooth_radius = 0;
  const PipelineResult exact = run_pipeline(phantom.scan, window, backend,
                                            {32, 0}, kDefaultThreshold);
  const double dice_exact = dice_score(exact.mask, phantom.mask);

  // Radius-1 smoothing spreads scores across the lesion boundary; the
  // majority threshold keeps flat interfaces in place.
  backend.smooth_radius = 1;
  const PipelineResult smoothed =
      run_pipeline(phantom.scan, window, backend, {32, 0}, 0.5);
  const double dice_smoothed = dice_score(smoothed.mask, phantom.mask);

  detail = "radius 0 dice " + fmt(dice_exact) + ", radius 1 dice " +
           fmt(dice_smoothed);
  return dice_exact == 1.0 && dice_smoothed >= 0.95;
}

// ---- criterion 7: DICOM parsing ---------------------------------------------

bool dicom_parsing(std::string& detail) {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    fixture::SliceFixtureSpec spec;
    spec.rows = rng.uniform_int(1, 32);
    spec.columns = rng.uniform_int(1, 32);
    spec.slope = rng.uniform_int(1, 4);
    spec.intercept = rng.uniform_int(-2048, 0);
    spec.window_center = rng.uniform_int(-1200, 1200);
    spec.window_width = rng.uniform_int(1, 4000);
    spec.instance_number = rng.uniform_int(0, 2000);
    spec.pixel_representation = rng.uniform_int(0, 1);
    spec.pixel_words.resize(
        static_cast<std::size_t>(spec.rows * spec.columns));
    for (auto& w : spec.pixel_words) {
      w = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
    }
    const auto bytes = fixture::build_slice(spec);
    const SliceRecord rec = parse_dicom_file({bytes.data(), bytes.size()});
    if (rec.rows != spec.rows || rec.columns != spec.columns ||
        rec.rescale_slope != spec.slope ||
        rec.rescale_intercept != spec.intercept ||
        !rec.window || rec.window->center != *spec.window_center ||
        rec.window->width != *spec.window_width ||
        rec.instance_number != *spec.instance_number) {
      detail = "field mismatch on fixture " + std::to_string(trial);
      return false;
    }
  }

  fixture::SliceFixtureSpec spec;
  spec.rows = 8;
  spec.columns = 8;
  spec.window_center = -600.0;
  spec.window_width = 1500.0;
  spec.instance_number = 42;
  spec.pixel_words.assign(64, 7);
  const auto bytes = fixture::build_slice(spec);

  double worst_ms = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t cut =
        132 + static_cast<std::size_t>(rng.uniform_int(
                  0, static_cast<int>(bytes.size()) - 133));
    const auto t0 = std::chrono::steady_clock::now();
    bool clean = false;
    try {
      parse_dicom_file({bytes.data(), cut});
    } catch (const MalformedStreamError&) {
      clean = true;
    } catch (const std::exception& e) {
      detail = "truncation at " + std::to_string(cut) +
               " raised a different error: " + e.what();
      return false;
    }
    const double ms = seconds_since(t0) * 1e3;
    worst_ms = std::max(worst_ms, ms);
    if (!clean) {
      detail = "truncation at " + std::to_string(cut) + " parsed fully";
      return false;
    }
    if (ms >= 100.0) {
      detail = "truncation case took " + fmt(ms) + " ms";
      return false;
    }
  }
  detail = "50 fixtures exact, 1000 truncations clean, worst " +
           fmt(worst_ms) + " ms";
  return true;
}

// ---- criterion 8: call-count structure --------------------------------------

bool call_count_structure(std::string& detail) {
  PhantomSpec spec;
  spec.width = 8;
  spec.height = 8;
  spec.depth = 709;
  spec.shell_margin = 2;
  spec.lung_z_margin = 2;
  spec.n_lesions = 0;
  const ScanVolume scan = generate_phantom(spec).scan;

  BackendDescriptor sleepy_2d;
  sleepy_2d.kind = BackendKind::sleep_stub;
  sleepy_2d.mode = PipelineMode::per_slice_2d;
  sleepy_2d.sleep_milliseconds = 5.0;
  BackendDescriptor sleepy_3d = sleepy_2d;
  sleepy_3d.mode = PipelineMode::stacked_3d;

  const ModeComparison cmp =
      compare_modes(scan, default_phantom_window(), sleepy_2d, sleepy_3d,
                    {32, 0}, 1);

  const double expected = 709.0 / 23.0;
  const double rel = std::abs(cmp.wall_ratio / expected - 1.0);
  detail = "calls " + std::to_string(cmp.two_d.backend_calls) + "/" +
           std::to_string(cmp.three_d.backend_calls) + ", wall ratio " +
           fmt(cmp.wall_ratio) + " vs " + fmt(expected) + " (rel " +
           fmt(rel) + ")";
  return cmp.two_d.backend_calls == 709 && cmp.three_d.backend_calls == 23 &&
         rel <= 0.10;
}

// ---- criteria 9 & 10 run through the CLI -------------------------------------

#ifdef CTSTACK_CLI_PATH

struct CliRun {
  int exit_code = -1;
  std::string output;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "acceptance-cli-log.txt";
  const std::string cmd = std::string(CTSTACK_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun run;
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  run.output.assign(std::istreambuf_iterator<char>(in),
                    std::istreambuf_iterator<char>());
  return run;
}

bool threshold_behavior(std::string& detail) {
  // Library half: a probability of exactly 0.2 is positive at the default.
  auto probe = make_volume<ProbVolume>("p", 3, 1, 1, 0.0f);
  probe.voxels = {0.1f, 0.2f, 0.3f};
  const MaskVolume probe_mask = threshold_prob(probe);
  if (probe_mask.voxels != std::vector<std::uint8_t>{0, 1, 1}) {
    detail = "3-voxel fixture thresholded to {" +
             std::to_string(probe_mask.voxels[0]) + "," +
             std::to_string(probe_mask.voxels[1]) + "," +
             std::to_string(probe_mask.voxels[2]) + "}";
    return false;
  }

  // CLI half: predict without --threshold echoes and applies 0.2.
  testutil::TempDir tmp("acc-threshold");
  CliRun synth = run_cli(
      "synth --seed 3 --width 32 --height 32 --depth 40 --lesions 1 "
      "--radius-lo 5 --radius-hi 7 --out " +
          (tmp / "ph").string(),
      tmp.path());
  if (synth.exit_code != 0) {
    detail = "synth failed: " + synth.output;
    return false;
  }
  CliRun predict = run_cli(
      "predict --in " + (tmp / "ph/scan").string() +
          " --mode 3d --band-lo 0.43 --band-hi 0.57 --radius 1 --out " +
          (tmp / "pred").string(),
      tmp.path());
  if (predict.exit_code != 0) {
    detail = "predict failed: " + predict.output;
    return false;
  }
  const json report = json::parse(read_file(tmp / "pred/report.json"));
  if (report.at("threshold").get<double>() != 0.2) {
    detail = "default threshold echoed as " +
             report.at("threshold").dump();
    return false;
  }
  const ProbVolume prob = read_prob(tmp / "pred/prob");
  const MaskVolume mask = read_mask(tmp / "pred/mask");
  if (threshold_prob(prob, 0.2).voxels != mask.voxels) {
    detail = "written mask is not threshold(prob, 0.2)";
    return false;
  }
  detail = "0.2 applied by default; exact-0.2 voxel is positive";
  return true;
}

bool sweep_reproduction(std::string& detail) {
  testutil::TempDir tmp("acc-sweep");
  CliRun synth = run_cli(
      "synth --seed 5 --width 24 --height 24 --depth 70 --lesions 2 "
      "--radius-lo 4 --radius-hi 7 --out " +
          (tmp / "ph").string(),
      tmp.path());
  if (synth.exit_code != 0) {
    detail = "synth failed: " + synth.output;
    return false;
  }
  CliRun sweep = run_cli(
      "sweep --in " + (tmp / "ph/scan").string() + " --truth " +
          (tmp / "ph/mask").string() +
          " --stack-size 32 --band-lo 0.43 --band-hi 0.57 --out " +
          (tmp / "sw").string(),
      tmp.path());
  if (sweep.exit_code != 0) {
    detail = "sweep failed: " + sweep.output;
    return false;
  }

  const char* labels[] = {"0", "0.375", "0.625"};
  const int expected_overlap[] = {0, 12, 20};
  for (int i = 0; i < 3; ++i) {
    const fs::path plan_file =
        tmp / ("sw/factor-" + std::string(labels[i]) + "/plan.json");
    if (!fs::exists(plan_file)) {
      detail = std::string("missing ") + plan_file.string();
      return false;
    }
    const StackPlan plan = read_plan_json(plan_file);
    if (plan.params.stack_size != 32 ||
        plan.params.overlap_slices != expected_overlap[i]) {
      detail = std::string("factor ") + labels[i] + " read back S=" +
               std::to_string(plan.params.stack_size) + " O=" +
               std::to_string(plan.params.overlap_slices);
      return false;
    }
  }
  detail = "factors {0, 0.375, 0.625} -> O = {0, 12, 20} at S = 32";
  return true;
}

#endif  // CTSTACK_CLI_PATH

}  // namespace

int main() {
  std::printf("ctstack acceptance suite (%s)\n",
              std::string(kToolVersion).c_str());

  criterion(1, "stack-plan fidelity (601/32 with and without overlap)",
            stack_plan_fidelity);
  criterion(2, "round-trip losslessness over the (N, S, O) grid",
            round_trip_losslessness);
  criterion(3, "dice matches the brute-force oracle", dice_oracle_equivalence);
  criterion(4, "area-plot normalization and continuity examples",
            area_plot_correctness);
  criterion(5, "3D area-plots are smoother than unstable 2D ones",
            continuity_ordering);
  criterion(6, "phantom dice with exact band and smoothing", phantom_dice);
  criterion(7, "DICOM fixture round trip and truncation fuzz", dicom_parsing);
  criterion(8, "2D/3D call counts and wall-clock structure (709 slices)",
            call_count_structure);
#ifdef CTSTACK_CLI_PATH
  criterion(9, "default 0.2 threshold is inclusive and echoed",
            threshold_behavior);
  criterion(10, "overlap sweep emits the {0, 0.375, 0.625} grid",
            sweep_reproduction);
#endif

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
