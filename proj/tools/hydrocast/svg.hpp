#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hydrocast/stats.hpp"

namespace hydrocast::cli {

// One model's boxes, aligned with the plot categories; nullopt leaves a gap.
struct BoxSeries {
  std::string label;
  std::vector<std::optional<BoxStats>> boxes;
};

// Grouped box plot: quartile boxes, median bar, whiskers excluding outliers,
// outliers as dots.
std::string box_plot_svg(const std::string& title, const std::string& y_label,
                         const std::vector<std::string>& categories, const std::vector<BoxSeries>& series);

}  // namespace hydrocast::cli
