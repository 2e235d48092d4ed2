#pragma once

#include <string>
#include <vector>

namespace dopf::harness::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// Scatter-with-lines plot; log axes skip non-positive points.
void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool log_x, bool log_y);

/// Grid heatmap: cell (i, j) holds values[j * xs.size() + i] and is
/// annotated with its (integer-formatted) value. NaN cells are hatched grey.
void write_heatmap(const std::string& path, const std::string& title, const std::string& x_label,
                   const std::string& y_label, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::vector<double>& values);

}  // namespace dopf::harness::svg
