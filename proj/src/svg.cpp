#include "tlae/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "tlae/error.hpp"

namespace tlae {

namespace {

constexpr double kWidth = 720, kHeight = 320;
constexpr double kLeft = 64, kRight = 140, kTop = 36, kBottom = 44;

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : "nan";
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string joined(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + exact(v[i]);
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const {
    return kLeft + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * (kWidth - kLeft - kRight);
  }
  double sy(double y) const {
    return kTop + (y1 - y) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

// Pads a data range by 5%; a flat range becomes +-1 around its value.
std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string header(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) +
                  "\" height=\"" + px(kHeight) + "\" viewBox=\"0 0 " + px(kWidth) + " " +
                  px(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + px(kWidth) + "\" height=\"" + px(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + px(kLeft) + "\" y=\"20\" font-size=\"13\">" + escape(title) + "</text>\n";
  return s;
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label,
                 bool log_x) {
  const double bx = kLeft, by = kHeight - kBottom, ex = kWidth - kRight;
  std::string s = "<g class=\"axes\" stroke=\"#444\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + px(bx) + "\" y1=\"" + px(by) + "\" x2=\"" + px(ex) + "\" y2=\"" + px(by) +
       "\"/>\n";
  s += "<line x1=\"" + px(bx) + "\" y1=\"" + px(kTop) + "\" x2=\"" + px(bx) + "\" y2=\"" +
       px(by) + "\"/>\n</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s += "<text x=\"" + px(bx - 6) + "\" y=\"" + px(f.sy(v) + 4) + "\" text-anchor=\"end\">" +
         label(v) + "</text>\n";
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    s += "<text x=\"" + px(f.sx(xv)) + "\" y=\"" + px(by + 16) + "\" text-anchor=\"middle\">" +
         label(log_x ? std::pow(10.0, xv) : xv) + "</text>\n";
  }
  if (!x_label.empty()) {
    s += "<text x=\"" + px((bx + ex) / 2) + "\" y=\"" + px(kHeight - 8) +
         "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  }
  if (!y_label.empty()) {
    s += "<text x=\"14\" y=\"" + px((kTop + by) / 2) + "\" transform=\"rotate(-90 14 " +
         px((kTop + by) / 2) + ")\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";
  }
  return s;
}

std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::string& cls, const std::string& color, double width) {
  std::string pts;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    pts += (pts.empty() ? "" : " ") + px(f.sx(xs[i])) + "," + px(f.sy(ys[i]));
  }
  return "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"" + px(width) + "\" points=\"" + pts + "\" data-values=\"" +
         joined(ys) + "\"/>\n";
}

std::string legend(std::size_t row, const std::string& text, const std::string& color) {
  const double y = kTop + 8 + 18.0 * static_cast<double>(row);
  const double x = kWidth - kRight + 12;
  return "<rect x=\"" + px(x) + "\" y=\"" + px(y - 8) + "\" width=\"14\" height=\"8\" fill=\"" +
         color + "\"/>\n<text x=\"" + px(x + 20) + "\" y=\"" + px(y) + "\">" + escape(text) +
         "</text>\n";
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

}  // namespace

std::string render_forecast_svg(const ForecastPlot& plot) {
  const std::size_t H = plot.actual.size();
  if (H == 0) fail(ErrorKind::data, "plot: no forecast steps");
  if (plot.point.size() != H) {
    fail(ErrorKind::data, "plot: " + std::to_string(plot.point.size()) +
                              " forecast steps but " + std::to_string(H) + " actuals");
  }
  if (plot.band && (plot.band->first.size() != H || plot.band->second.size() != H)) {
    fail(ErrorKind::data, "plot: quantile band length differs from actuals");
  }
  double lo = INFINITY, hi = -INFINITY;
  auto widen = [&](const std::vector<double>& v) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  };
  widen(plot.actual);
  widen(plot.point);
  if (plot.band) {
    widen(plot.band->first);
    widen(plot.band->second);
  }
  const auto [y0, y1] = padded(lo, hi);
  const Frame f{0.0, static_cast<double>(H - 1), y0, y1};
  std::vector<double> xs(H);
  for (std::size_t i = 0; i < H; ++i) xs[i] = static_cast<double>(i);

  std::string s = header(plot.title);
  s += axes(f, "forecast step", "value", false);
  std::size_t row = 0;
  if (plot.band) {
    const auto& [lower, upper] = *plot.band;
    std::string d = "M";
    for (std::size_t i = 0; i < H; ++i) {
      d += (i ? " L" : "") + px(f.sx(xs[i])) + "," + px(f.sy(upper[i]));
    }
    for (std::size_t i = H; i-- > 0;) d += " L" + px(f.sx(xs[i])) + "," + px(f.sy(lower[i]));
    s += "<path class=\"band\" d=\"" + d + " Z\" fill=\"#fdbf6f\" fill-opacity=\"0.6\"/>\n";
    s += polyline(f, xs, lower, "band-lower", "#fdbf6f", 1.0);
    s += polyline(f, xs, upper, "band-upper", "#fdbf6f", 1.0);
    s += legend(row++, "90% interval", "#fdbf6f");
  }
  s += polyline(f, xs, plot.actual, "actual", "#222222", 1.5);
  s += legend(row++, "actual", "#222222");
  s += polyline(f, xs, plot.point, "point", "#1f77b4", 1.5);
  s += legend(row++, "forecast", "#1f77b4");
  return s + "</svg>\n";
}

std::string render_line_chart(const LineChart& chart) {
  if (chart.x.empty()) fail(ErrorKind::data, "chart: no x values");
  std::vector<double> xs = chart.x;
  if (chart.log_x) {
    for (double& v : xs) {
      if (!(v > 0.0)) fail(ErrorKind::data, "chart: log axis needs positive x values");
      v = std::log10(v);
    }
  }
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [name, ys] : chart.lines) {
    if (ys.size() != xs.size()) fail(ErrorKind::data, "chart: line '" + name + "' length mismatch");
    for (double y : ys) {
      if (!std::isfinite(y)) continue;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const auto [y0, y1] = padded(lo, hi);
  const Frame f{*std::min_element(xs.begin(), xs.end()), *std::max_element(xs.begin(), xs.end()),
                y0, y1};
  std::string s = header(chart.title);
  s += axes(f, chart.x_label, chart.y_label, chart.log_x);
  std::size_t row = 0;
  for (const auto& [name, ys] : chart.lines) {
    const char* color = kPalette[row % std::size(kPalette)];
    s += polyline(f, xs, ys, "line", color, 1.5);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      s += "<circle cx=\"" + px(f.sx(xs[i])) + "\" cy=\"" + px(f.sy(ys[i])) + "\" r=\"3\" fill=\"" +
           color + "\"/>\n";
    }
    s += legend(row++, name, color);
  }
  return s + "</svg>\n";
}

std::vector<double> svg_data_values(const std::string& svg, const std::string& cls) {
  const std::string key = "class=\"" + cls + "\"";
  const std::size_t at = svg.find(key);
  if (at == std::string::npos) return {};
  const std::size_t end = svg.find('>', at);
  const std::size_t attr = svg.find("data-values=\"", at);
  if (attr == std::string::npos || attr > end) return {};
  const std::size_t begin = attr + 13;
  const std::size_t stop = svg.find('"', begin);
  std::vector<double> out;
  const char* p = svg.data() + begin;
  const char* last = svg.data() + stop;
  while (p < last) {
    while (p < last && *p == ' ') ++p;
    if (p >= last) break;
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, last, v);
    if (ec != std::errc()) {
      out.push_back(NAN);
      while (p < last && *p != ' ') ++p;
      continue;
    }
    out.push_back(v);
    p = next;
  }
  return out;
}

}  // namespace tlae
