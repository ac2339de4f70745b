#include "hydrocast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hydrocast::cli {

namespace {

constexpr double kWidthPerCategory = 90.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 60.0, kRight = 140.0, kTop = 40.0, kBottom = 50.0;
const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string box_plot_svg(const std::string& title, const std::string& y_label,
                         const std::vector<std::string>& categories, const std::vector<BoxSeries>& series) {
  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const auto& s : series) {
    for (const auto& b : s.boxes) {
      if (!b || b->n == 0) continue;
      double bl = b->whisker_low, bh = b->whisker_high;
      for (double o : b->outliers) {
        bl = std::min(bl, o);
        bh = std::max(bh, o);
      }
      lo = any ? std::min(lo, bl) : std::min(0.0, bl);
      hi = any ? std::max(hi, bh) : std::max(1.0, bh);
      any = true;
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;

  const double plot_w = kWidthPerCategory * static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double plot_h = kHeight - kTop - kBottom;
  const double width = kLeft + plot_w + kRight;
  auto y = [&](double v) { return kTop + plot_h * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kHeight)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";

  for (int i = 0; i <= 5; ++i) {
    const double v = lo + (hi - lo) * i / 5.0;
    o << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + plot_w) << "\" y1=\"" << num(y(v)) << "\" y2=\""
      << num(y(v)) << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << num(v)
      << "</text>\n";
  }
  o << "<text transform=\"translate(16," << num(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";

  const double slot = kWidthPerCategory / static_cast<double>(series.size() + 1);
  const double box_w = slot * 0.7;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double x0 = kLeft + kWidthPerCategory * static_cast<double>(c);
    o << "<text x=\"" << num(x0 + kWidthPerCategory / 2) << "\" y=\"" << num(kTop + plot_h + 18)
      << "\" text-anchor=\"middle\">" << escape(categories[c]) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].boxes.size() || !series[s].boxes[c] || series[s].boxes[c]->n == 0) continue;
      const BoxStats& b = *series[s].boxes[c];
      const char* color = kPalette[s % std::size(kPalette)];
      const double cx = x0 + slot * static_cast<double>(s + 1);
      o << "<g stroke=\"" << color << "\" fill=\"none\">";
      o << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\"" << num(y(b.whisker_low)) << "\" y2=\""
        << num(y(b.q1)) << "\"/>";
      o << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\"" << num(y(b.q3)) << "\" y2=\""
        << num(y(b.whisker_high)) << "\"/>";
      o << "<rect x=\"" << num(cx - box_w / 2) << "\" y=\"" << num(y(b.q3)) << "\" width=\"" << num(box_w)
        << "\" height=\"" << num(std::max(0.5, y(b.q1) - y(b.q3))) << "\" fill=\"" << color
        << "\" fill-opacity=\"0.25\"/>";
      o << "<line x1=\"" << num(cx - box_w / 2) << "\" x2=\"" << num(cx + box_w / 2) << "\" y1=\""
        << num(y(b.median)) << "\" y2=\"" << num(y(b.median)) << "\" stroke-width=\"2\"/>";
      for (double v : b.outliers) {
        o << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(v)) << "\" r=\"1.5\"/>";
      }
      o << "</g>\n";
    }
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = kTop + 14.0 * static_cast<double>(s);
    o << "<rect x=\"" << num(kLeft + plot_w + 12) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[s % std::size(kPalette)] << "\"/>";
    o << "<text x=\"" << num(kLeft + plot_w + 26) << "\" y=\"" << num(ly + 9) << "\">" << escape(series[s].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace hydrocast::cli
