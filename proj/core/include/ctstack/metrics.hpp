#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctstack/volume.hpp"

namespace ctstack {

/// Per-slice mask area over slice area, plus the max-normalized series.
struct AreaPlot {
  std::string scan_id;
  std::vector<double> ratios;      // positives / (width*height), per slice
  std::vector<double> normalized;  // ratios / max(ratios); zeros if max is 0
};

/// 2*|pred AND truth| / (|pred| + |truth|). Two empty masks agree
/// perfectly and score 1.
double dice_score(const MaskVolume& pred, const MaskVolume& truth);

/// Unweighted arithmetic mean of per-scan dice scores.
double dataset_dice(
    const std::vector<std::pair<const MaskVolume*, const MaskVolume*>>& pairs);

AreaPlot area_plot(const MaskVolume& mask);

/// Total variation of the normalized series: sum |a[i+1] - a[i]|.
/// Low values mean slice-to-slice continuity.
double continuity_tv(const AreaPlot& plot);

/// Fraction of slices containing at least one positive voxel.
double prevalence(const std::vector<const MaskVolume*>& masks);

struct ScanEval {
  std::string scan_id;
  double dice = 0.0;
  double truth_continuity_tv = 0.0;
  double pred_continuity_tv = 0.0;
};

struct EvalReport {
  std::vector<ScanEval> scans;
  double mean_dice = 0.0;    // canonical: per-scan mean
  double pooled_dice = 0.0;  // voxel-pooled across the dataset
  double prevalence = 0.0;   // over the truth masks
  std::string timing_summary_json;  // verbatim JSON object; empty if absent
};

struct EvalPair {
  std::string scan_id;
  const MaskVolume* pred = nullptr;
  const MaskVolume* truth = nullptr;
};

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs);

std::string eval_report_json(const EvalReport& report);

/// Two-column model/dice table, percentages formatted to at most one
/// decimal place.
std::string format_dice_table(
    const std::vector<std::pair<std::string, double>>& model_dice);

}  // namespace ctstack
