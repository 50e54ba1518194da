#include "sodi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sodi {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

double tr(double v, bool log_scale) {
  return log_scale ? std::log10(std::max(v, 1e-300)) : v;
}

}  // namespace

std::string svg_line_chart(const std::vector<SvgSeries>& series,
                           const SvgOptions& opts) {
  const double ml = 60, mr = 20, mt = 34, mb = 46;
  const double pw = opts.width - ml - mr, ph = opts.height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, tr(s.x[i], opts.log_x));
      xmax = std::max(xmax, tr(s.x[i], opts.log_x));
      ymin = std::min(ymin, tr(s.y[i], opts.log_y));
      ymax = std::max(ymax, tr(s.y[i], opts.log_y));
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double xpad = 0.03 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
  xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;

  auto px = [&](double v) {
    return ml + (tr(v, opts.log_x) - xmin) / (xmax - xmin) * pw;
  };
  auto py = [&](double v) {
    return mt + ph - (tr(v, opts.log_y) - ymin) / (ymax - ymin) * ph;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width
     << "\" height=\"" << opts.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#888\"/>\n";
  if (!opts.title.empty())
    os << "<text x=\"" << opts.width / 2 << "\" y=\"20\" font-size=\"14\" "
          "text-anchor=\"middle\" font-family=\"sans-serif\">"
       << opts.title << "</text>\n";

  // Axis ticks at the corners plus midpoints, in data units.
  auto tick_text = [&](double tv, bool logs) {
    std::ostringstream t;
    t.precision(4);
    t << (logs ? std::pow(10.0, tv) : tv);
    return t.str();
  };
  for (double frac : {0.0, 0.5, 1.0}) {
    const double tx = xmin + frac * (xmax - xmin);
    const double ty = ymin + frac * (ymax - ymin);
    os << "<text x=\"" << ml + frac * pw << "\" y=\"" << opts.height - mb + 16
       << "\" font-size=\"11\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\">"
       << tick_text(tx, opts.log_x) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + ph - frac * ph + 4
       << "\" font-size=\"11\" text-anchor=\"end\" "
          "font-family=\"sans-serif\">"
       << tick_text(ty, opts.log_y) << "</text>\n";
  }
  if (!opts.x_label.empty())
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opts.height - 8
       << "\" font-size=\"12\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\">"
       << opts.x_label << "</text>\n";
  if (!opts.y_label.empty())
    os << "<text x=\"14\" y=\"" << mt + ph / 2
       << "\" font-size=\"12\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" transform=\"rotate(-90 14 "
       << mt + ph / 2 << ")\">" << opts.y_label << "</text>\n";

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kPalette[ci % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    os << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 16 + 16 * ci
       << "\" font-size=\"12\" fill=\"" << color
       << "\" font-family=\"sans-serif\">" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sodi
