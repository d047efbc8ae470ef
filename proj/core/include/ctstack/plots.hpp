#pragma once

#include <filesystem>
#include <string_view>

#include "ctstack/metrics.hpp"

namespace ctstack {

// Area-plot artifacts. The CSV always carries the columns
// slice_index, truth_ratio, truth_normalized, pred_ratio, pred_normalized;
// cells of an absent series stay empty. Either series may be null, not both.

void write_area_plot_csv(const std::filesystem::path& path,
                         const AreaPlot* truth, const AreaPlot* pred);

/// Line chart of the normalized series (truth and prediction when present).
void write_area_plot_svg(const std::filesystem::path& path,
                         const AreaPlot* truth, const AreaPlot* pred,
                         std::string_view title);

}  // namespace ctstack
