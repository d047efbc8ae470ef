#include "ctstack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "ctstack/util.hpp"

using nlohmann::json;

namespace ctstack {

double dice_score(const MaskVolume& pred, const MaskVolume& truth) {
  validate_geometry(pred);
  validate_geometry(truth);
  require_same_geometry(pred, truth, "dice_score");

  std::size_t intersection = 0;
  std::size_t pred_count = 0;
  std::size_t truth_count = 0;
  for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
    pred_count += pred.voxels[i];
    truth_count += truth.voxels[i];
    intersection += static_cast<std::size_t>(pred.voxels[i] & truth.voxels[i]);
  }
  if (pred_count + truth_count == 0) return 1.0;
  return 2.0 * static_cast<double>(intersection) /
         static_cast<double>(pred_count + truth_count);
}

double dataset_dice(
    const std::vector<std::pair<const MaskVolume*, const MaskVolume*>>& pairs) {
  if (pairs.empty()) {
    throw InvalidArgumentError("dataset dice needs at least one scan pair");
  }
  double sum = 0.0;
  for (const auto& [pred, truth] : pairs) {
    sum += dice_score(*pred, *truth);
  }
  return sum / static_cast<double>(pairs.size());
}

AreaPlot area_plot(const MaskVolume& mask) {
  validate_geometry(mask);
  AreaPlot plot;
  plot.scan_id = mask.scan_id;
  plot.ratios.reserve(static_cast<std::size_t>(mask.depth));
  const double slice_area = static_cast<double>(mask.slice_size());
  for (int z = 0; z < mask.depth; ++z) {
    std::size_t positives = 0;
    for (std::uint8_t v : mask.slice(z)) positives += v;
    plot.ratios.push_back(static_cast<double>(positives) / slice_area);
  }
  const double max_ratio =
      *std::max_element(plot.ratios.begin(), plot.ratios.end());
  plot.normalized.reserve(plot.ratios.size());
  for (double r : plot.ratios) {
    plot.normalized.push_back(max_ratio > 0.0 ? r / max_ratio : 0.0);
  }
  return plot;
}

double continuity_tv(const AreaPlot& plot) {
  if (plot.normalized.size() < 2) {
    throw InvalidArgumentError(
        "continuity needs an area-plot of at least two slices");
  }
  double tv = 0.0;
  for (std::size_t i = 0; i + 1 < plot.normalized.size(); ++i) {
    tv += std::abs(plot.normalized[i + 1] - plot.normalized[i]);
  }
  return tv;
}

double prevalence(const std::vector<const MaskVolume*>& masks) {
  if (masks.empty()) {
    throw InvalidArgumentError("prevalence needs at least one mask");
  }
  std::size_t total_slices = 0;
  std::size_t positive_slices = 0;
  for (const MaskVolume* mask : masks) {
    validate_geometry(*mask);
    total_slices += static_cast<std::size_t>(mask->depth);
    for (int z = 0; z < mask->depth; ++z) {
      const auto s = mask->slice(z);
      if (std::any_of(s.begin(), s.end(), [](std::uint8_t v) { return v != 0; }))
        ++positive_slices;
    }
  }
  return static_cast<double>(positive_slices) /
         static_cast<double>(total_slices);
}

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) {
    throw InvalidArgumentError("evaluation needs at least one scan pair");
  }
  EvalReport report;
  std::size_t pooled_inter = 0;
  std::size_t pooled_pred = 0;
  std::size_t pooled_truth = 0;
  std::vector<const MaskVolume*> truths;
  double dice_sum = 0.0;

  for (const EvalPair& pair : pairs) {
    ScanEval eval;
    eval.scan_id = pair.scan_id;
    eval.dice = dice_score(*pair.pred, *pair.truth);
    dice_sum += eval.dice;
    if (pair.truth->depth >= 2) {
      eval.truth_continuity_tv = continuity_tv(area_plot(*pair.truth));
      eval.pred_continuity_tv = continuity_tv(area_plot(*pair.pred));
    }
    report.scans.push_back(std::move(eval));

    for (std::size_t i = 0; i < pair.pred->voxels.size(); ++i) {
      pooled_pred += pair.pred->voxels[i];
      pooled_truth += pair.truth->voxels[i];
      pooled_inter += static_cast<std::size_t>(pair.pred->voxels[i] &
                                               pair.truth->voxels[i]);
    }
    truths.push_back(pair.truth);
  }

  report.mean_dice = dice_sum / static_cast<double>(pairs.size());
  report.pooled_dice =
      pooled_pred + pooled_truth == 0
          ? 1.0
          : 2.0 * static_cast<double>(pooled_inter) /
                static_cast<double>(pooled_pred + pooled_truth);
  report.prevalence = prevalence(truths);
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  json scans = json::array();
  for (const ScanEval& s : report.scans) {
    scans.push_back({{"scan_id", s.scan_id},
                     {"dice", s.dice},
                     {"truth_continuity_tv", s.truth_continuity_tv},
                     {"pred_continuity_tv", s.pred_continuity_tv}});
  }
  json j = {{"scans", scans},
            {"mean_dice", report.mean_dice},
            {"pooled_dice", report.pooled_dice},
            {"prevalence", report.prevalence}};
  if (report.timing_summary_json.empty()) {
    j["timing"] = nullptr;
  } else {
    try {
      j["timing"] = json::parse(report.timing_summary_json);
    } catch (const json::exception& e) {
      throw FormatError(std::string("timing summary is not valid JSON: ") +
                        e.what());
    }
  }
  return j.dump(2) + "\n";
}

std::string format_dice_table(
    const std::vector<std::pair<std::string, double>>& model_dice) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(model_dice.size());
  for (const auto& [model, dice] : model_dice) {
    const double percent = dice * 100.0;
    char buf[32];
    if (std::abs(percent - std::round(percent)) < 1e-9) {
      std::snprintf(buf, sizeof buf, "%.0f%%", percent);
    } else {
      std::snprintf(buf, sizeof buf, "%.1f%%", percent);
    }
    rows.push_back({model, buf});
  }
  return format_comparison_table({"Model", "Dice Score"}, rows);
}

}  // namespace ctstack
