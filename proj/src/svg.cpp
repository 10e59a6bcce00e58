// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/svg.hpp"
#include "hmr/common.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hmr {

namespace {

const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_tick(double v) {
  std::ostringstream os;
  if (v != 0.0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-3))
    os << std::scientific;
  os.precision(3);
  os << v;
  return os.str();
}

} // namespace

void write_svg_plot(const std::string &path, const std::string &title,
                    const std::string &xlabel, const std::string &ylabel,
                    const std::vector<SvgSeries> &series, bool logx,
                    bool logy) {
  const double W = 840, H = 600;
  const double L = 90, R = 30, T = 50, B = 70;

  auto usable = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y))
      return false;
    if (logx && x <= 0)
      return false;
    if (logy && y <= 0)
      return false;
    return true;
  };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto &s : series)
    for (auto [x, y] : s.points) {
      if (!usable(x, y))
        continue;
      const double tx = logx ? std::log10(x) : x;
      const double ty = logy ? std::log10(y) : y;
      xmin = std::min(xmin, tx);
      xmax = std::max(xmax, tx);
      ymin = std::min(ymin, ty);
      ymax = std::max(ymax, ty);
    }
  if (!(xmin < xmax)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymin < ymax)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double padx = 0.03 * (xmax - xmin), pady = 0.05 * (ymax - ymin);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;

  auto X = [&](double x) {
    const double t = logx ? std::log10(x) : x;
    return L + (t - xmin) / (xmax - xmin) * (W - L - R);
  };
  auto Y = [&](double y) {
    const double t = logy ? std::log10(y) : y;
    return H - B - (t - ymin) / (ymax - ymin) * (H - T - B);
  };

  std::ofstream out(path);
  HMR_REQUIRE(out.good(), "svg: cannot write '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"16\" font-family=\"sans-serif\">" << title
      << "</text>\n";

  // axes box
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
      << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks
  auto emit_ticks = [&](bool horizontal) {
    const double lo = horizontal ? xmin : ymin;
    const double hi = horizontal ? xmax : ymax;
    const bool lg = horizontal ? logx : logy;
    std::vector<double> ticks;
    if (lg) {
      for (int d = static_cast<int>(std::floor(lo));
           d <= static_cast<int>(std::ceil(hi)); ++d)
        if (d >= lo - 1e-9 && d <= hi + 1e-9)
          ticks.push_back(std::pow(10.0, d));
    } else {
      const double span = hi - lo;
      const double step = std::pow(10.0, std::floor(std::log10(span / 4)));
      const double mult = span / step > 8 ? 2.0 : 1.0;
      for (double v = std::ceil(lo / (step * mult)) * step * mult;
           v <= hi + 1e-12; v += step * mult)
        ticks.push_back(v);
    }
    for (double v : ticks) {
      if (horizontal) {
        const double px = X(lg ? v : v);
        out << "<line x1=\"" << px << "\" y1=\"" << H - B << "\" x2=\"" << px
            << "\" y2=\"" << H - B + 6 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px << "\" y=\"" << H - B + 22
            << "\" text-anchor=\"middle\" font-size=\"11\" "
               "font-family=\"sans-serif\">"
            << (lg ? ("1e" + std::to_string(static_cast<int>(
                                 std::round(std::log10(v)))))
                   : fmt_tick(v))
            << "</text>\n";
      } else {
        const double py = Y(lg ? v : v);
        out << "<line x1=\"" << L - 6 << "\" y1=\"" << py << "\" x2=\"" << L
            << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << L - 10 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-size=\"11\" "
               "font-family=\"sans-serif\">"
            << (lg ? ("1e" + std::to_string(static_cast<int>(
                                 std::round(std::log10(v)))))
                   : fmt_tick(v))
            << "</text>\n";
      }
    }
  };
  emit_ticks(true);
  emit_ticks(false);

  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18
      << "\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\">"
      << xlabel << "</text>\n";
  out << "<text x=\"20\" y=\"" << (T + H - B) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 20 "
      << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";

  int color = 0;
  for (const auto &s : series) {
    std::ostringstream pts;
    bool open = false;
    for (auto [x, y] : s.points) {
      if (!usable(x, y)) {
        open = false;
        continue;
      }
      if (!open) {
        if (pts.tellp() > 0)
          pts << "\" fill=\"none\" stroke=\"" << kPalette[color % 8]
              << "\" stroke-width=\"1.8\"/>\n<polyline points=\"";
        open = true;
      }
      pts << X(x) << "," << Y(y) << " ";
    }
    out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
        << kPalette[color % 8] << "\" stroke-width=\"1.8\"/>\n";
    // legend
    const double ly = T + 16 + 18 * color;
    out << "<line x1=\"" << W - R - 180 << "\" y1=\"" << ly << "\" x2=\""
        << W - R - 150 << "\" y2=\"" << ly << "\" stroke=\""
        << kPalette[color % 8] << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R - 144 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label
        << "</text>\n";
    ++color;
  }
  out << "</svg>\n";
}

} // namespace hmr
