#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sdsra {

struct CurveSeries {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

/// Trailing moving average; early points average over what is available.
std::vector<std::pair<double, double>> moving_average(const std::vector<std::pair<double, double>>& points,
                                                      std::size_t window);

/// Step-vs-return chart with two polylines per series: the raw curve (faint)
/// and its window-`window` moving average.
std::string learning_curve_svg(const std::string& title, const std::vector<CurveSeries>& series,
                               std::size_t window = 100);

std::string xml_escape(const std::string& text);

}  // namespace sdsra
