#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tlae {

struct ForecastPlot {
  std::string title;
  std::vector<double> actual;  // one value per forecast step
  std::vector<double> point;
  // 5% and 95% quantiles; absent gives a point-only chart.
  std::optional<std::pair<std::vector<double>, std::vector<double>>> band;
};

// Actuals, point forecast and a shaded interval band. The exact plotted
// values are also stored in `data-values` attributes so output can be checked
// by parsing it back. Output is a pure function of the input.
std::string render_forecast_svg(const ForecastPlot& plot);

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<std::pair<std::string, std::vector<double>>> lines;  // label, y per x
  bool log_x = false;
};

// Metric-versus-value chart for sweeps; NaN y values leave gaps.
std::string render_line_chart(const LineChart& chart);

// Values of the `data-values` attribute on the first element with `class`.
std::vector<double> svg_data_values(const std::string& svg, const std::string& cls);

}  // namespace tlae
