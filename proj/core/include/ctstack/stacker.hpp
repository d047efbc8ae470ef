#pragma once

#include <filesystem>
#include <vector>

#include "ctstack/volume.hpp"

namespace ctstack {

// Decomposition of a CT volume into fixed-depth stacks. Stack windows are
// half-open [start, start + stack_size); adjacent starts differ by
// stride = stack_size - overlap_slices, and only the final stack may carry
// padding slices.

struct StackParams {
  int stack_size = 32;    // S: slices per stack
  int overlap_slices = 0;  // O: slices shared by adjacent stacks

  int stride() const { return stack_size - overlap_slices; }
  double overlap_factor() const {
    return static_cast<double>(overlap_slices) /
           static_cast<double>(stack_size);
  }
};

/// Converts an overlap factor into whole slices; rejects factors that are
/// not an integer number of slices at this stack size.
int overlap_from_factor(double factor, int stack_size);

struct StackEntry {
  int start = 0;
  int pad = 0;
};

struct StackPlan {
  int total_slices = 0;  // N
  StackParams params;
  std::vector<StackEntry> entries;
};

StackPlan plan_stacks(int total_slices, const StackParams& params);

template <typename V>
struct StackSlab {
  int plan_index = 0;
  V data;  // depth equals the plan's stack size
};

/// Extracts the planned stacks. Padding slices are filled with -1000 HU for
/// scans (air) and zeros for masks and probability/normalized payloads.
std::vector<StackSlab<ScanVolume>> slice_into_stacks(const ScanVolume& volume,
                                                     const StackPlan& plan);
std::vector<StackSlab<MaskVolume>> slice_into_stacks(const MaskVolume& volume,
                                                     const StackPlan& plan);
std::vector<StackSlab<NormalizedVolume>> slice_into_stacks(
    const NormalizedVolume& volume, const StackPlan& plan);
std::vector<StackSlab<ProbVolume>> slice_into_stacks(const ProbVolume& volume,
                                                     const StackPlan& plan);

/// Inverse of slice_into_stacks for prediction payloads: drops padding and
/// averages every slice covered by more than one stack.
ProbVolume reassemble(const std::vector<StackSlab<ProbVolume>>& slabs,
                      const StackPlan& plan);

void write_plan_json(const std::filesystem::path& file, const StackPlan& plan);
StackPlan read_plan_json(const std::filesystem::path& file);

}  // namespace ctstack
