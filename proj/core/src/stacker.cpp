#include "ctstack/stacker.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ctstack/util.hpp"

using nlohmann::json;

namespace ctstack {

int overlap_from_factor(double factor, int stack_size) {
  if (stack_size < 1) {
    throw InvalidArgumentError("stack size must be at least 1");
  }
  if (!(factor >= 0.0) || factor >= 1.0) {
    throw InvalidArgumentError("overlap factor must lie in [0, 1), got " +
                               std::to_string(factor));
  }
  const double exact = factor * stack_size;
  const int slices = static_cast<int>(std::llround(exact));
  if (std::abs(exact - slices) > 1e-9) {
    throw InvalidArgumentError(
        "overlap factor " + std::to_string(factor) +
        " is not a whole number of slices at stack size " +
        std::to_string(stack_size));
  }
  return slices;
}

StackPlan plan_stacks(int total_slices, const StackParams& params) {
  if (params.stack_size < 1) {
    throw InvalidArgumentError("stack size must be at least 1");
  }
  if (params.overlap_slices < 0 || params.overlap_slices >= params.stack_size) {
    throw InvalidArgumentError(
        "overlap slices must satisfy 0 <= overlap < stack size (got overlap " +
        std::to_string(params.overlap_slices) + ", stack size " +
        std::to_string(params.stack_size) + ")");
  }
  if (total_slices < 1) {
    throw InvalidArgumentError("total slices must be at least 1");
  }

  const int stride = params.stride();
  const int count =
      total_slices <= params.stack_size
          ? 1
          : 1 + (total_slices - params.stack_size + stride - 1) / stride;

  StackPlan plan;
  plan.total_slices = total_slices;
  plan.params = params;
  plan.entries.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const int start = k * stride;
    const int pad = std::max(0, start + params.stack_size - total_slices);
    plan.entries.push_back({start, pad});
  }
  return plan;
}

namespace {

template <typename V>
std::vector<StackSlab<V>> slice_impl(const V& volume, const StackPlan& plan,
                                     typename V::value_type pad_fill) {
  validate_geometry(volume);
  if (volume.depth != plan.total_slices) {
    throw GeometryMismatchError(
        "volume depth " + std::to_string(volume.depth) +
        " does not match the plan's total slices " +
        std::to_string(plan.total_slices));
  }

  const int stack_size = plan.params.stack_size;
  std::vector<StackSlab<V>> slabs;
  slabs.reserve(plan.entries.size());
  for (std::size_t k = 0; k < plan.entries.size(); ++k) {
    const StackEntry& entry = plan.entries[k];
    V slab;
    slab.scan_id = volume.scan_id;
    slab.width = volume.width;
    slab.height = volume.height;
    slab.depth = stack_size;
    slab.spacing = volume.spacing;
    slab.voxels.assign(volume.slice_size() *
                           static_cast<std::size_t>(stack_size),
                       pad_fill);
    const int copied = stack_size - entry.pad;
    std::copy(volume.voxels.begin() +
                  static_cast<std::ptrdiff_t>(volume.slice_size()) * entry.start,
              volume.voxels.begin() +
                  static_cast<std::ptrdiff_t>(volume.slice_size()) *
                      (entry.start + copied),
              slab.voxels.begin());
    slabs.push_back({static_cast<int>(k), std::move(slab)});
  }
  return slabs;
}

}  // namespace

std::vector<StackSlab<ScanVolume>> slice_into_stacks(const ScanVolume& volume,
                                                     const StackPlan& plan) {
  return slice_impl(volume, plan, static_cast<std::int16_t>(-1000));
}

std::vector<StackSlab<MaskVolume>> slice_into_stacks(const MaskVolume& volume,
                                                     const StackPlan& plan) {
  return slice_impl(volume, plan, static_cast<std::uint8_t>(0));
}

std::vector<StackSlab<NormalizedVolume>> slice_into_stacks(
    const NormalizedVolume& volume, const StackPlan& plan) {
  return slice_impl(volume, plan, 0.0f);
}

std::vector<StackSlab<ProbVolume>> slice_into_stacks(const ProbVolume& volume,
                                                     const StackPlan& plan) {
  return slice_impl(volume, plan, 0.0f);
}

ProbVolume reassemble(const std::vector<StackSlab<ProbVolume>>& slabs,
                      const StackPlan& plan) {
  if (slabs.size() != plan.entries.size()) {
    throw PlanMismatchError("slab count " + std::to_string(slabs.size()) +
                            " does not match the plan's " +
                            std::to_string(plan.entries.size()) + " entries");
  }
  const int stack_size = plan.params.stack_size;
  for (std::size_t k = 0; k < slabs.size(); ++k) {
    if (slabs[k].plan_index != static_cast<int>(k)) {
      throw PlanMismatchError("slab at position " + std::to_string(k) +
                              " carries plan index " +
                              std::to_string(slabs[k].plan_index));
    }
    if (slabs[k].data.depth != stack_size) {
      throw PlanMismatchError("slab " + std::to_string(k) + " has depth " +
                              std::to_string(slabs[k].data.depth) +
                              "; the plan's stack size is " +
                              std::to_string(stack_size));
    }
    if (!slabs[k].data.same_geometry(slabs[0].data)) {
      throw PlanMismatchError("slab " + std::to_string(k) +
                              " geometry differs from slab 0");
    }
    validate_geometry(slabs[k].data);
  }

  const ProbVolume& head = slabs[0].data;
  const std::size_t slice_size = head.slice_size();

  ProbVolume out;
  out.scan_id = head.scan_id;
  out.width = head.width;
  out.height = head.height;
  out.depth = plan.total_slices;
  out.spacing = head.spacing;
  out.voxels.assign(slice_size * static_cast<std::size_t>(plan.total_slices),
                    0.0f);

  // Double accumulation keeps the mean exact when covering values agree:
  // k identical f32 values sum and divide back without rounding.
  std::vector<double> sums(out.voxels.size(), 0.0);
  std::vector<int> cover(static_cast<std::size_t>(plan.total_slices), 0);

  for (std::size_t k = 0; k < slabs.size(); ++k) {
    const StackEntry& entry = plan.entries[k];
    const ProbVolume& data = slabs[k].data;
    const int kept = stack_size - entry.pad;
    for (int local = 0; local < kept; ++local) {
      const int global = entry.start + local;
      ++cover[static_cast<std::size_t>(global)];
      const float* src = data.voxels.data() +
                         slice_size * static_cast<std::size_t>(local);
      double* dst =
          sums.data() + slice_size * static_cast<std::size_t>(global);
      for (std::size_t i = 0; i < slice_size; ++i) {
        dst[i] += static_cast<double>(src[i]);
      }
    }
  }

  for (int z = 0; z < plan.total_slices; ++z) {
    const int n = cover[static_cast<std::size_t>(z)];
    const double* src = sums.data() + slice_size * static_cast<std::size_t>(z);
    float* dst =
        out.voxels.data() + slice_size * static_cast<std::size_t>(z);
    for (std::size_t i = 0; i < slice_size; ++i) {
      dst[i] = static_cast<float>(src[i] / n);
    }
  }
  return out;
}

void write_plan_json(const std::filesystem::path& file, const StackPlan& plan) {
  json entries = json::array();
  for (const StackEntry& e : plan.entries) {
    entries.push_back({{"start", e.start}, {"pad", e.pad}});
  }
  const json j = {{"total_slices", plan.total_slices},
                  {"stack_size", plan.params.stack_size},
                  {"overlap_slices", plan.params.overlap_slices},
                  {"overlap_factor", plan.params.overlap_factor()},
                  {"entries", entries}};
  write_file_atomic(file, j.dump(2) + "\n");
}

StackPlan read_plan_json(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw FormatError("plan.json: parse error in " + file.string() + ": " +
                      e.what());
  }
  try {
    StackPlan plan;
    plan.total_slices = j.at("total_slices").get<int>();
    plan.params.stack_size = j.at("stack_size").get<int>();
    plan.params.overlap_slices = j.at("overlap_slices").get<int>();
    for (const auto& e : j.at("entries")) {
      plan.entries.push_back(
          {e.at("start").get<int>(), e.at("pad").get<int>()});
    }
    return plan;
  } catch (const json::exception& e) {
    throw FormatError("plan.json: missing or mistyped field in " +
                      file.string() + ": " + e.what());
  }
}

}  // namespace ctstack
