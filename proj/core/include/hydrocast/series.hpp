#pragma once

#include <optional>
#include <vector>

#include "hydrocast/calendar.hpp"

namespace hydrocast {

// A contiguous daily series; NaN marks missing days.
struct DailySeries {
  Date start;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  Date date_at(std::size_t i) const { return start + static_cast<std::int32_t>(i); }
  std::optional<double> at(Date d) const {
    if (d < start || d - start >= static_cast<std::int32_t>(values.size())) return std::nullopt;
    return values[static_cast<std::size_t>(d - start)];
  }
  DailySeries scaled(double factor) const {
    DailySeries s = *this;
    for (double& v : s.values) v *= factor;
    return s;
  }
};

}  // namespace hydrocast
