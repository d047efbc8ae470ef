#include "ctstack/segmenter.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "ctstack/subprocess.hpp"
#include "ctstack/util.hpp"
#include "ctstack/volume_io.hpp"

namespace fs = std::filesystem;

namespace ctstack {

std::string backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::threshold3d:
      return "threshold3d";
    case BackendKind::slice2d:
      return "slice2d";
    case BackendKind::external:
      return "external";
    case BackendKind::sleep_stub:
      return "sleep";
  }
  return "?";
}

std::string pipeline_mode_name(PipelineMode mode) {
  return mode == PipelineMode::per_slice_2d ? "2d" : "3d";
}

namespace {

void check_band(const Band& band) {
  if (!(band.lo >= 0.0 && band.lo <= band.hi && band.hi <= 1.0)) {
    throw InvalidArgumentError("band must satisfy 0 <= lo <= hi <= 1 (got [" +
                               std::to_string(band.lo) + ", " +
                               std::to_string(band.hi) + "])");
  }
}

void check_radius(int radius) {
  if (radius < 0 || radius > kMaxSmoothRadius) {
    throw InvalidArgumentError("smoothing radius must lie in [0, " +
                               std::to_string(kMaxSmoothRadius) + "], got " +
                               std::to_string(radius));
  }
}

/// Sliding window sum with clamp-to-edge sampling: out[i] is the sum of
/// in[clamp(j, 0, n-1)] for j in [i-r, i+r]. Exact in integers.
void box_line(const std::int32_t* in, std::int32_t* out, int n,
              std::ptrdiff_t stride, int r, std::vector<std::int32_t>& prefix) {
  prefix.resize(static_cast<std::size_t>(n) + 1);
  prefix[0] = 0;
  for (int i = 0; i < n; ++i) {
    prefix[static_cast<std::size_t>(i) + 1] =
        prefix[static_cast<std::size_t>(i)] + in[i * stride];
  }
  const std::int32_t first = in[0];
  const std::int32_t last = in[(n - 1) * stride];
  for (int i = 0; i < n; ++i) {
    const int lo = i - r;
    const int hi = i + r;
    std::int32_t sum = prefix[static_cast<std::size_t>(std::min(hi, n - 1)) + 1] -
                       prefix[static_cast<std::size_t>(std::max(lo, 0))];
    if (lo < 0) sum += -lo * first;
    if (hi > n - 1) sum += (hi - (n - 1)) * last;
    out[i * stride] = sum;
  }
}

/// In-place separable box sum over x and y (and z when depth coupling is on).
void box_sum(std::vector<std::int32_t>& counts, int width, int height,
             int depth, int r, bool couple_z) {
  std::vector<std::int32_t> tmp(counts.size());
  std::vector<std::int32_t> prefix;
  const std::ptrdiff_t sw = width;
  const std::ptrdiff_t ss = static_cast<std::ptrdiff_t>(width) * height;

  // x pass
  for (int z = 0; z < depth; ++z) {
    for (int y = 0; y < height; ++y) {
      const std::ptrdiff_t base = z * ss + y * sw;
      box_line(counts.data() + base, tmp.data() + base, width, 1, r, prefix);
    }
  }
  counts.swap(tmp);

  // y pass
  for (int z = 0; z < depth; ++z) {
    for (int x = 0; x < width; ++x) {
      const std::ptrdiff_t base = z * ss + x;
      box_line(counts.data() + base, tmp.data() + base, height, sw, r, prefix);
    }
  }
  counts.swap(tmp);

  if (couple_z && depth > 0) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::ptrdiff_t base = y * sw + x;
        box_line(counts.data() + base, tmp.data() + base, depth, ss, r, prefix);
      }
    }
    counts.swap(tmp);
  }
}

ProbVolume band_fraction(const NormalizedVolume& input, const Band& band,
                         int radius, bool couple_z) {
  check_band(band);
  check_radius(radius);
  validate_geometry(input);

  std::vector<std::int32_t> counts(input.voxels.size());
  for (std::size_t i = 0; i < input.voxels.size(); ++i) {
    const double v = static_cast<double>(input.voxels[i]);
    counts[i] = (v >= band.lo && v <= band.hi) ? 1 : 0;
  }

  int denom = 1;
  if (radius > 0) {
    box_sum(counts, input.width, input.height, input.depth, radius, couple_z);
    const int window = 2 * radius + 1;
    denom = couple_z ? window * window * window : window * window;
  }

  ProbVolume out;
  out.scan_id = input.scan_id;
  out.width = input.width;
  out.height = input.height;
  out.depth = input.depth;
  out.spacing = input.spacing;
  out.voxels.resize(input.voxels.size());
  const double d = static_cast<double>(denom);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.voxels[i] = static_cast<float>(counts[i] / d);
  }
  return out;
}

}  // namespace

ProbVolume segment_threshold3d(const NormalizedVolume& slab, const Band& band,
                               int smooth_radius) {
  return band_fraction(slab, band, smooth_radius, /*couple_z=*/true);
}

bool slice_zeroed(std::uint64_t seed, std::string_view scan_id,
                  int slice_index, double rate) {
  if (rate <= 0.0) return false;
  if (rate >= 1.0) return true;
  const std::uint64_t x = splitmix64(splitmix64(seed ^ fnv1a64(scan_id)) ^
                                     static_cast<std::uint64_t>(slice_index));
  return unit_uniform(x) < rate;
}

ProbVolume segment_slice2d(const NormalizedVolume& slice, const Band& band,
                           int smooth_radius,
                           const InstabilitySpec& instability,
                           int slice_index) {
  if (slice.depth != 1) {
    throw InvalidArgumentError("slice2d expects a depth-1 volume, got depth " +
                               std::to_string(slice.depth));
  }
  if (!(instability.rate >= 0.0 && instability.rate <= 1.0)) {
    throw InvalidArgumentError("instability rate must lie in [0, 1]");
  }
  ProbVolume out = band_fraction(slice, band, smooth_radius, /*couple_z=*/false);
  if (slice_zeroed(instability.seed, slice.scan_id, slice_index,
                   instability.rate)) {
    std::fill(out.voxels.begin(), out.voxels.end(), 0.0f);
  }
  return out;
}

namespace {

/// Unique scratch directory for one backend invocation; removed on scope
/// exit so concurrent invocations stay isolated.
class BackendWorkspace {
 public:
  BackendWorkspace() {
    static std::atomic<std::uint64_t> counter{0};
    const auto ticks = static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count());
    path_ = fs::temp_directory_path() /
            ("ctstack-backend-" + std::to_string(getpid()) + "-" +
             to_hex(splitmix64(ticks ^ counter.fetch_add(1))));
    fs::create_directories(path_);
  }
  ~BackendWorkspace() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

ProbVolume segment_external(const NormalizedVolume& slab,
                            const ExternalSpec& spec) {
  if (spec.command.empty()) {
    throw InvalidArgumentError("external backend command is empty");
  }
  validate_geometry(slab);

  BackendWorkspace workspace;
  const fs::path in_dir = workspace.path() / "in";
  const fs::path out_dir = workspace.path() / "out";
  write_native(in_dir, slab);

  std::vector<std::string> argv = split_command(spec.command);
  if (argv.empty()) {
    throw InvalidArgumentError("external backend command is blank");
  }
  argv.push_back("--in");
  argv.push_back(in_dir.string());
  argv.push_back("--out");
  argv.push_back(out_dir.string());

  const ProcessResult proc = run_process(argv, spec.timeout_seconds);
  if (proc.timed_out) {
    throw BackendFailureError("external backend timed out after " +
                                  std::to_string(spec.timeout_seconds) +
                                  " s: " + spec.command,
                              proc.output);
  }
  if (proc.exit_code != 0) {
    throw BackendFailureError("external backend exited with code " +
                                  std::to_string(proc.exit_code) + ": " +
                                  spec.command,
                              proc.output);
  }

  ProbVolume out;
  try {
    out = read_prob(out_dir);
  } catch (const Error& e) {
    throw BackendFailureError(
        std::string("external backend produced invalid output: ") + e.what(),
        proc.output);
  }
  if (!out.same_geometry(slab)) {
    throw BackendFailureError(
        "external backend output geometry " + std::to_string(out.width) + "x" +
            std::to_string(out.height) + "x" + std::to_string(out.depth) +
            " does not match the input " + std::to_string(slab.width) + "x" +
            std::to_string(slab.height) + "x" + std::to_string(slab.depth),
        proc.output);
  }
  out.scan_id = slab.scan_id;
  return out;
}

namespace {

void busy_wait_ms(double milliseconds) {
  const auto until =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double, std::milli>(milliseconds));
  while (std::chrono::steady_clock::now() < until) {
  }
}

ProbVolume zeros_like(const NormalizedVolume& input) {
  ProbVolume out;
  out.scan_id = input.scan_id;
  out.width = input.width;
  out.height = input.height;
  out.depth = input.depth;
  out.spacing = input.spacing;
  out.voxels.assign(input.voxels.size(), 0.0f);
  return out;
}

ProbVolume run_backend_3d(const BackendDescriptor& backend,
                          const NormalizedVolume& slab) {
  switch (backend.kind) {
    case BackendKind::threshold3d:
      return segment_threshold3d(slab, backend.band, backend.smooth_radius);
    case BackendKind::external:
      return segment_external(slab, backend.external);
    case BackendKind::sleep_stub:
      busy_wait_ms(backend.sleep_milliseconds);
      return zeros_like(slab);
    case BackendKind::slice2d:
      throw InvalidArgumentError(
          "the slice2d backend only runs in per-slice 2D mode");
  }
  throw InvalidArgumentError("unknown backend kind");
}

ProbVolume run_backend_2d(const BackendDescriptor& backend,
                          const NormalizedVolume& slice, int slice_index) {
  switch (backend.kind) {
    case BackendKind::slice2d:
      return segment_slice2d(slice, backend.band, backend.smooth_radius,
                             backend.instability, slice_index);
    case BackendKind::external:
      return segment_external(slice, backend.external);
    case BackendKind::sleep_stub:
      busy_wait_ms(backend.sleep_milliseconds);
      return zeros_like(slice);
    case BackendKind::threshold3d:
      throw InvalidArgumentError(
          "the threshold3d backend only runs in stacked 3D mode");
  }
  throw InvalidArgumentError("unknown backend kind");
}

NormalizedVolume extract_slice(const NormalizedVolume& norm, int z) {
  NormalizedVolume out;
  out.scan_id = norm.scan_id;
  out.width = norm.width;
  out.height = norm.height;
  out.depth = 1;
  out.spacing = norm.spacing;
  const auto s = norm.slice(z);
  out.voxels.assign(s.begin(), s.end());
  return out;
}

}  // namespace

ProbVolume predict_stacked(const NormalizedVolume& norm,
                           const BackendDescriptor& backend,
                           const StackParams& params, int workers,
                           PipelineResult* timing) {
  const StackPlan plan = plan_stacks(norm.depth, params);
  const auto slabs = slice_into_stacks(norm, plan);
  const int count = static_cast<int>(slabs.size());

  std::vector<ProbVolume> results(slabs.size());
  std::vector<double> call_seconds(slabs.size(), 0.0);
  parallel_for(count, workers, [&](int k) {
    const auto t0 = std::chrono::steady_clock::now();
    results[static_cast<std::size_t>(k)] =
        run_backend_3d(backend, slabs[static_cast<std::size_t>(k)].data);
    call_seconds[static_cast<std::size_t>(k)] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  });

  std::vector<StackSlab<ProbVolume>> prob_slabs;
  prob_slabs.reserve(results.size());
  for (std::size_t k = 0; k < results.size(); ++k) {
    prob_slabs.push_back({static_cast<int>(k), std::move(results[k])});
  }

  if (timing) {
    timing->backend_calls += count;
    timing->call_seconds.insert(timing->call_seconds.end(),
                                call_seconds.begin(), call_seconds.end());
    for (double s : call_seconds) timing->backend_seconds += s;
  }
  return reassemble(prob_slabs, plan);
}

PipelineResult run_pipeline(const ScanVolume& scan, const WindowSpec& window,
                            const BackendDescriptor& backend,
                            const StackParams& params, double threshold,
                            int workers) {
  if (backend.mode == PipelineMode::per_slice_2d &&
      backend.kind == BackendKind::threshold3d) {
    throw InvalidArgumentError(
        "the threshold3d backend only runs in stacked 3D mode");
  }
  if (backend.mode == PipelineMode::stacked_3d &&
      backend.kind == BackendKind::slice2d) {
    throw InvalidArgumentError(
        "the slice2d backend only runs in per-slice 2D mode");
  }

  const auto wall0 = std::chrono::steady_clock::now();
  PipelineResult result;

  const NormalizedVolume norm = apply_window(scan, window);

  if (backend.mode == PipelineMode::per_slice_2d) {
    const int count = norm.depth;
    std::vector<ProbVolume> results(static_cast<std::size_t>(count));
    std::vector<double> call_seconds(static_cast<std::size_t>(count), 0.0);
    parallel_for(count, workers, [&](int z) {
      const auto t0 = std::chrono::steady_clock::now();
      results[static_cast<std::size_t>(z)] =
          run_backend_2d(backend, extract_slice(norm, z), z);
      call_seconds[static_cast<std::size_t>(z)] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
    });

    ProbVolume prob;
    prob.scan_id = norm.scan_id;
    prob.width = norm.width;
    prob.height = norm.height;
    prob.depth = norm.depth;
    prob.spacing = norm.spacing;
    prob.voxels.resize(norm.voxels.size());
    for (int z = 0; z < count; ++z) {
      const auto& r = results[static_cast<std::size_t>(z)];
      std::copy(r.voxels.begin(), r.voxels.end(), prob.slice(z).begin());
    }
    result.prob = std::move(prob);
    result.backend_calls = count;
    result.call_seconds = std::move(call_seconds);
    for (double s : result.call_seconds) result.backend_seconds += s;
  } else {
    // Inference keeps the overlap at zero; overlap is a sweep-time knob.
    const StackParams inference_params{params.stack_size, 0};
    result.prob = predict_stacked(norm, backend, inference_params, workers,
                                  &result);
  }

  result.mask = threshold_prob(result.prob, threshold);
  result.pipeline_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
          .count();
  return result;
}

}  // namespace ctstack
