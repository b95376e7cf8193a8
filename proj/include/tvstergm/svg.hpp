#ifndef TVSTERGM_SVG_HPP
#define TVSTERGM_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tvstergm/errors.hpp"

namespace tvstergm::svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "#000000";
  std::string dash;  // stroke-dasharray, empty for solid
  double width = 1.5;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lower;
  std::vector<double> upper;
  std::string fill = "#bbbbbb";
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '"') o += "&quot;";
    else o += c;
  }
  return o;
}

// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
inline double nice_step(double range, int target = 6) {
  if (!(range > 0)) return 1.0;
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return mag * (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0);
}

// Line plot with optional shaded bands and a dotted zero line.
struct Plot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Band> bands;
  std::vector<Series> series;
  bool zero_line = true;
  int width = 640;
  int height = 400;

  std::string render() const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto grow = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
      for (std::size_t k = 0; k < xs.size() && k < ys.size(); ++k) {
        if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) continue;
        x0 = std::min(x0, xs[k]);
        x1 = std::max(x1, xs[k]);
        y0 = std::min(y0, ys[k]);
        y1 = std::max(y1, ys[k]);
      }
    };
    for (const auto& b : bands) {
      grow(b.x, b.lower);
      grow(b.x, b.upper);
    }
    for (const auto& s : series) grow(s.x, s.y);
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double ml = 60, mr = 20, mt = 30, mb = 45;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    o << "<text x=\"" << num(width / 2.0) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(title) << "</text>\n";
    for (const auto& b : bands) {
      o << "<polygon fill=\"" << b.fill << "\" stroke=\"none\" points=\"";
      for (std::size_t k = 0; k < b.x.size(); ++k) o << num(px(b.x[k])) << ',' << num(py(b.upper[k])) << ' ';
      for (std::size_t k = b.x.size(); k-- > 0;) o << num(px(b.x[k])) << ',' << num(py(b.lower[k])) << ' ';
      o << "\"/>\n";
    }
    // Axes and ticks.
    o << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    const double xs = nice_step(x1 - x0), ys = nice_step(y1 - y0);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs)
      o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(px(t))
        << "\" y2=\"" << num(mt + ph + 4) << "\" stroke=\"#000000\"/><text x=\"" << num(px(t))
        << "\" y=\"" << num(mt + ph + 16) << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys)
      o << "<line x1=\"" << num(ml - 4) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(ml)
        << "\" y2=\"" << num(py(t)) << "\" stroke=\"#000000\"/><text x=\"" << num(ml - 6)
        << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
    if (zero_line && y0 < 0 && y1 > 0)
      o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(ml + pw)
        << "\" y2=\"" << num(py(0)) << "\" stroke=\"#666666\" stroke-dasharray=\"2,3\"/>\n";
    o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(height - 8.0)
      << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
    o << "<text transform=\"translate(14," << num(mt + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel) << "</text>\n";
    for (const auto& s : series) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << num(s.width) << "\"";
      if (!s.dash.empty()) o << " stroke-dasharray=\"" << s.dash << "\"";
      o << " points=\"";
      for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
        if (std::isfinite(s.y[k])) o << num(px(s.x[k])) << ',' << num(py(s.y[k])) << ' ';
      o << "\"/>\n";
    }
    double ly = mt + 14;
    for (const auto& s : series) {
      if (s.label.empty()) continue;
      o << "<line x1=\"" << num(ml + pw - 110) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(ml + pw - 90) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color << "\"";
      if (!s.dash.empty()) o << " stroke-dasharray=\"" << s.dash << "\"";
      o << "/><text x=\"" << num(ml + pw - 85) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
        << "</text>\n";
      ly += 14;
    }
    o << "</svg>\n";
    return o.str();
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << render();
  }
};

}  // namespace tvstergm::svg

#endif
