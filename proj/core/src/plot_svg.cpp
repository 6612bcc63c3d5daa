// Minimal SVG line charts for the two plot-data CSVs.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "resalloc/errors.hpp"
#include "resalloc/harness.hpp"

namespace resalloc::harness {

namespace {

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  Table rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series) {
  constexpr double kWidth = 800, kHeight = 480, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  std::ostringstream svg;
  char buf[128];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = y_min + (y_max - y_min) * t / 4.0;
    const double xv = x_min + (x_max - x_min) * t / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << buf
        << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", xv);
    svg << "<text x=\"" << px(xv) << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">"
        << buf << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n"
      << "<text transform=\"translate(16," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      svg << buf;
    }
    svg << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    svg << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kWidth - kRight + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly << "\">" << series[i].label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// Groups rows by the first column, taking (x, y) from the given columns.
std::vector<Series> group(const Table& rows, std::size_t x_col, std::size_t y_col,
                          const std::string& suffix) {
  std::map<int, Series> by_variant;
  for (const auto& r : rows) {
    if (r.size() <= std::max(x_col, y_col)) continue;
    const int v = std::stoi(r[0]);
    auto& s = by_variant[v];
    s.label = "variant " + r[0] + suffix;
    s.points.emplace_back(std::stod(r[x_col]), std::stod(r[y_col]));
  }
  std::vector<Series> out;
  for (auto& [v, s] : by_variant) out.push_back(std::move(s));
  return out;
}

}  // namespace

void render_svg_charts(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir) {
  const Table exploration = read_csv(in_dir / "exploration_vs_reward.csv");
  const Table utilization = read_csv(in_dir / "utilization_timeseries.csv");

  write_text_file(out_dir / "reward_curve.svg",
                  line_chart("Cumulative reward per training episode", "episode",
                             "cumulative reward", group(exploration, 1, 3, "")));
  write_text_file(out_dir / "exploration.svg",
                  line_chart("Exploration measure per training episode", "episode",
                             "exploration measure", group(exploration, 1, 2, "")));

  std::vector<Series> util = group(utilization, 1, 3, " utilized");
  std::vector<Series> performing = group(utilization, 1, 2, " performing");
  util.insert(util.end(), performing.begin(), performing.end());
  write_text_file(out_dir / "utilization.svg",
                  line_chart("Resource utilization during evaluation", "period", "resources", util));
}

}  // namespace resalloc::harness
