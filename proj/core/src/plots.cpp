#include "ctstack/plots.hpp"

#include <cstdio>
#include <sstream>

#include "ctstack/util.hpp"

namespace ctstack {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void check_series(const AreaPlot* truth, const AreaPlot* pred) {
  if (!truth && !pred) {
    throw InvalidArgumentError("area-plot output needs at least one series");
  }
  if (truth && pred && truth->normalized.size() != pred->normalized.size()) {
    throw GeometryMismatchError(
        "truth and prediction area-plots have different slice counts (" +
        std::to_string(truth->normalized.size()) + " vs " +
        std::to_string(pred->normalized.size()) + ")");
  }
}

}  // namespace

void write_area_plot_csv(const std::filesystem::path& path,
                         const AreaPlot* truth, const AreaPlot* pred) {
  check_series(truth, pred);
  const std::size_t n =
      truth ? truth->normalized.size() : pred->normalized.size();

  std::ostringstream out;
  out << "slice_index,truth_ratio,truth_normalized,pred_ratio,"
         "pred_normalized\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << i << ',';
    if (truth) out << num(truth->ratios[i]) << ',' << num(truth->normalized[i]);
    else out << ',';
    out << ',';
    if (pred) out << num(pred->ratios[i]) << ',' << num(pred->normalized[i]);
    else out << ',';
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

namespace {

constexpr double kWidth = 880.0;
constexpr double kHeight = 460.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 52.0;

void emit_series(std::ostringstream& svg, const std::vector<double>& values,
                 const char* color) {
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const std::size_t n = values.size();

  auto px = [&](std::size_t i) {
    return kMarginLeft +
           (n > 1 ? plot_w * static_cast<double>(i) /
                        static_cast<double>(n - 1)
                  : plot_w / 2.0);
  };
  auto py = [&](double v) { return kMarginTop + (1.0 - v) * plot_h; };

  if (n == 1) {
    svg << "  <circle cx=\"" << coord(px(0)) << "\" cy=\""
        << coord(py(values[0])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    return;
  }
  svg << "  <polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) svg << ' ';
    svg << coord(px(i)) << ',' << coord(py(values[i]));
  }
  svg << "\"/>\n";
}

}  // namespace

void write_area_plot_svg(const std::filesystem::path& path,
                         const AreaPlot* truth, const AreaPlot* pred,
                         std::string_view title) {
  check_series(truth, pred);
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << coord(kWidth / 2)
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";

  // y gridlines at 0, 0.25, 0.5, 0.75, 1
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    const double y = kMarginTop + (1.0 - v) * plot_h;
    svg << "  <line x1=\"" << coord(kMarginLeft) << "\" y1=\"" << coord(y)
        << "\" x2=\"" << coord(kMarginLeft + plot_w) << "\" y2=\"" << coord(y)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "  <text x=\"" << coord(kMarginLeft - 8) << "\" y=\""
        << coord(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << coord(v) << "</text>\n";
  }

  // axes
  svg << "  <line x1=\"" << coord(kMarginLeft) << "\" y1=\""
      << coord(kMarginTop) << "\" x2=\"" << coord(kMarginLeft) << "\" y2=\""
      << coord(kMarginTop + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << coord(kMarginLeft) << "\" y1=\""
      << coord(kMarginTop + plot_h) << "\" x2=\""
      << coord(kMarginLeft + plot_w) << "\" y2=\"" << coord(kMarginTop + plot_h)
      << "\" stroke=\"black\"/>\n";

  const std::size_t n =
      truth ? truth->normalized.size() : pred->normalized.size();
  svg << "  <text x=\"" << coord(kMarginLeft + plot_w / 2) << "\" y=\""
      << coord(kHeight - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">slice index (0.."
      << (n - 1) << ")</text>\n";
  svg << "  <text x=\"18\" y=\"" << coord(kMarginTop + plot_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 18 "
      << coord(kMarginTop + plot_h / 2) << ")\">normalized area</text>\n";

  if (truth) emit_series(svg, truth->normalized, "#1f6fb2");
  if (pred) emit_series(svg, pred->normalized, "#e07a29");

  // legend
  double ly = kMarginTop + 8;
  auto legend = [&](const char* label, const char* color) {
    svg << "  <rect x=\"" << coord(kMarginLeft + plot_w - 120) << "\" y=\""
        << coord(ly - 8) << "\" width=\"12\" height=\"3\" fill=\"" << color
        << "\"/>\n";
    svg << "  <text x=\"" << coord(kMarginLeft + plot_w - 102) << "\" y=\""
        << coord(ly - 2)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << label
        << "</text>\n";
    ly += 16;
  };
  if (truth) legend("truth", "#1f6fb2");
  if (pred) legend("prediction", "#e07a29");

  svg << "</svg>\n";
  write_file_atomic(path, svg.str());
}

}  // namespace ctstack
