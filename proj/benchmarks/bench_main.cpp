#include <benchmark/benchmark.h>

#include "ctstack/metrics.hpp"
#include "ctstack/segmenter.hpp"
#include "ctstack/stacker.hpp"
#include "ctstack/synth.hpp"
#include "ctstack/util.hpp"
#include "ctstack/volume.hpp"

using namespace ctstack;

namespace {

ScanVolume bench_scan(int w, int h, int d) {
  Rng rng(1);
  auto scan = make_volume<ScanVolume>("bench", w, h, d, 0);
  for (auto& v : scan.voxels) {
    v = static_cast<std::int16_t>(rng.uniform_int(-1024, 1500));
  }
  return scan;
}

MaskVolume bench_mask(int w, int h, int d, double density) {
  Rng rng(2);
  auto mask = make_volume<MaskVolume>("bench", w, h, d, 0);
  for (auto& v : mask.voxels) v = rng.uniform() < density ? 1 : 0;
  return mask;
}

void BM_PlanStacks(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_stacks(601, {32, 20}));
  }
}
BENCHMARK(BM_PlanStacks);

void BM_SliceAndReassemble(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  Rng rng(3);
  auto prob = make_volume<ProbVolume>("p", 64, 64, depth, 0.0f);
  for (auto& v : prob.voxels) v = static_cast<float>(rng.uniform());
  const StackPlan plan = plan_stacks(depth, {32, 0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(reassemble(slice_into_stacks(prob, plan), plan));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(prob.size()));
}
BENCHMARK(BM_SliceAndReassemble)->Arg(128)->Arg(256);

void BM_ApplyWindow(benchmark::State& state) {
  const ScanVolume scan = bench_scan(512, 512, 16);
  const WindowSpec window{-600.0, 1500.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_window(scan, window));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(scan.size()));
}
BENCHMARK(BM_ApplyWindow);

void BM_ResizeBilinear(benchmark::State& state) {
  const ScanVolume scan = bench_scan(256, 256, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resize_to_standard(scan));
  }
}
BENCHMARK(BM_ResizeBilinear);

void BM_Threshold3d(benchmark::State& state) {
  const int radius = static_cast<int>(state.range(0));
  Rng rng(4);
  auto norm = make_volume<NormalizedVolume>("n", 64, 64, 64, 0.0f);
  for (auto& v : norm.voxels) v = static_cast<float>(rng.uniform());
  const Band band{0.4, 0.6};
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_threshold3d(norm, band, radius));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(norm.size()));
}
BENCHMARK(BM_Threshold3d)->Arg(0)->Arg(1)->Arg(3);

void BM_DiceScore(benchmark::State& state) {
  const MaskVolume a = bench_mask(128, 128, 64, 0.2);
  const MaskVolume b = bench_mask(128, 128, 64, 0.25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dice_score(a, b));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_DiceScore);

void BM_AreaPlot(benchmark::State& state) {
  const MaskVolume mask = bench_mask(512, 512, 64, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(area_plot(mask));
  }
}
BENCHMARK(BM_AreaPlot);

void BM_GeneratePhantom(benchmark::State& state) {
  PhantomSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.depth = 64;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_phantom(spec));
  }
}
BENCHMARK(BM_GeneratePhantom);

}  // namespace

BENCHMARK_MAIN();
