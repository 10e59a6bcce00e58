// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_SVG_HPP
#define HMR_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace hmr {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal line-plot emitter: axes, optional log scales, legend. Points with
// non-finite or non-positive (on log axes) coordinates are skipped.
void write_svg_plot(const std::string &path, const std::string &title,
                    const std::string &xlabel, const std::string &ylabel,
                    const std::vector<SvgSeries> &series, bool logx,
                    bool logy);

} // namespace hmr

#endif // HMR_SVG_HPP
