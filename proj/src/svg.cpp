#include "lica/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lica {

namespace {

constexpr double kWidth = 680, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out.push_back(c);
  }
  return out;
}

}  // namespace

std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series) {
  if (series.empty()) throw std::invalid_argument("render_line_plot: no series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("render_line_plot: series '" + s.label +
                                  "' is empty or mismatched");
    for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    for (double v : s.lo) ymin = std::min(ymin, v);
    for (double v : s.hi) ymax = std::max(ymax, v);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kWidth - kLeft - kRight); };
  auto py = [&](double y) { return kHeight - kBottom - (y - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
  // axes
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
     << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << kHeight - kBottom + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(fx) << "</text>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(py(fy) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(fy) << "</text>\n";
  }
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 14
     << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
     << (kTop + kHeight - kBottom) / 2 << ")\">" << escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!s.lo.empty() && s.lo.size() == s.x.size() && s.hi.size() == s.x.size()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t p = 0; p < s.x.size(); ++p)
        os << fmt(px(s.x[p])) << "," << fmt(py(s.hi[p])) << " ";
      for (std::size_t p = s.x.size(); p-- > 0;)
        os << fmt(px(s.x[p])) << "," << fmt(py(s.lo[p])) << " ";
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t p = 0; p < s.x.size(); ++p)
      os << fmt(px(s.x[p])) << "," << fmt(py(s.y[p])) << " ";
    os << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(i);
    os << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << ly - 9
       << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight - 132 << "\" y=\"" << ly - 3
       << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lica
