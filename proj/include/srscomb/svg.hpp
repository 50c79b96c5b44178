#ifndef SRSCOMB_SVG_HPP
#define SRSCOMB_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace srscomb::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the polyline
  bool bars = false;
};

struct Plot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
  int width = 640;
  int height = 400;
};

namespace detail {

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[i % 6];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string render(const Plot& p) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y1 = 1.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  y1 += 0.05 * (y1 - y0);
  const double ml = 64, mr = 16, mt = 32, mb = 48;
  const double pw = p.width - ml - mr, ph = p.height - mt - mb;
  auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  using detail::num;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(p.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(p.title) << "</text>\n";
  os << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + t * (x1 - x0) / 4, yv = y0 + t * (y1 - y0) / 4;
    os << "<text x=\"" << num(X(xv)) << "\" y=\"" << num(mt + ph + 16) << "\" text-anchor=\"middle\">" << detail::tick(xv) << "</text>\n";
    os << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(Y(yv) + 4) << "\" text-anchor=\"end\">" << detail::tick(yv) << "</text>\n";
  }
  os << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(p.height - 8.0) << "\" text-anchor=\"middle\">" << detail::escape(p.xlabel) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(mt + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << num(mt + ph / 2) << ")\">"
     << detail::escape(p.ylabel) << "</text>\n";

  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const auto& s = p.series[si];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.bars) {
      const double w = n > 1 ? (X(s.x[1]) - X(s.x[0])) * 0.9 : pw * 0.05;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.y[i])) continue;
        os << "<rect x=\"" << num(X(s.x[i]) - w / 2) << "\" y=\"" << num(Y(s.y[i])) << "\" width=\"" << num(w) << "\" height=\""
           << num(Y(y0) - Y(s.y[i])) << "\" fill=\"" << detail::color(si) << "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      std::string pts;
      auto flush = [&] {
        if (!pts.empty()) os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << detail::color(si) << "\" points=\"" << pts << "\"/>\n";
        pts.clear();
      };
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.y[i])) {
          flush();
          continue;
        }
        pts += num(X(s.x[i])) + "," + num(Y(s.y[i])) + " ";
      }
      flush();
    }
    os << "<text x=\"" << num(ml + pw - 8) << "\" y=\"" << num(mt + 16 + 14.0 * static_cast<double>(si)) << "\" text-anchor=\"end\" fill=\""
       << detail::color(si) << "\">" << detail::escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write(const std::string& path, const Plot& p) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << render(p);
  if (!os) throw IoError("write failed for " + path);
}

}  // namespace srscomb::svg

#endif  // SRSCOMB_SVG_HPP
