#pragma once

#include <string>
#include <vector>

namespace ipmlab::svg {

// One named polyline.  x and y must have equal length; non-finite points
// split the polyline instead of being drawn.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal hand-emitted line chart: fixed 800 x 500 viewBox, linear axes
// with five ticks per side, a legend, and one polyline per series.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

}  // namespace ipmlab::svg
