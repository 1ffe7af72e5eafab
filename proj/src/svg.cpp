#include "sdsra/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sdsra {

std::vector<std::pair<double, double>> moving_average(const std::vector<std::pair<double, double>>& points,
                                                      std::size_t window) {
  std::vector<std::pair<double, double>> out;
  out.reserve(points.size());
  double sum = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum += points[i].second;
    if (i >= window) sum -= points[i - window].second;
    const auto n = std::min(i + 1, window);
    out.emplace_back(points[i].first, sum / static_cast<double>(n));
  }
  return out;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 80, kRight = 180, kTop = 40, kBottom = 50;

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts, const std::string& color,
                     double width, double opacity, const std::string& cls) {
  std::string s = "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + xml_escape(color) + "\"" +
                  fmt(" stroke-width=\"%.1f\" stroke-opacity=\"%.2f\" points=\"", width, opacity);
  for (std::size_t i = 0; i < pts.size(); ++i)
    s += fmt(i ? " %.2f,%.2f" : "%.2f,%.2f", f.px(pts[i].first), f.py(pts[i].second));
  return s + "\"/>\n";
}

}  // namespace

std::string learning_curve_svg(const std::string& title, const std::vector<CurveSeries>& series,
                               std::size_t window) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
      f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
    }
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  if (f.x1 - f.x0 < 1e-12) f.x1 = f.x0 + 1;
  if (f.y1 - f.y0 < 1e-12) f.y0 -= 0.5, f.y1 += 0.5;

  std::string svg = fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                        kWidth, kHeight, kWidth, kHeight);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += fmt("<text x=\"%.0f\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">", kLeft) + xml_escape(title) +
         "</text>\n";
  const double bx = kLeft, by = kHeight - kBottom;
  svg += fmt("<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n", bx, by, kWidth - kRight, by);
  svg += fmt("<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n", bx, by, bx, kTop);
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0, y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    svg += fmt("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">%.0f</text>\n",
               f.px(x), by + 16, x);
    svg += fmt("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.1f</text>\n",
               bx - 6, f.py(y) + 4, y);
  }
  svg += fmt("<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">step</text>\n",
             (kLeft + kWidth - kRight) / 2, kHeight - 12);
  svg += fmt("<text x=\"16\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 16 %.1f)\">return</text>\n",
             (kTop + by) / 2, (kTop + by) / 2);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    svg += polyline(f, s.points, s.color, 1.0, 0.3, "raw");
    svg += polyline(f, moving_average(s.points, window), s.color, 2.0, 1.0, "smoothed");
    const double ly = kTop + 18.0 * static_cast<double>(i);
    svg += fmt("<line x1=\"%.0f\" y1=\"%.1f\" x2=\"%.0f\" y2=\"%.1f\" stroke=\"", kWidth - kRight + 10, ly,
               kWidth - kRight + 30, ly) + xml_escape(s.color) + "\" stroke-width=\"2\"/>\n";
    svg += fmt("<text x=\"%.0f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\">", kWidth - kRight + 36, ly + 4) +
           xml_escape(s.label) + "</text>\n";
  }
  return svg + "</svg>\n";
}

}  // namespace sdsra
