#pragma once

// Minimal static SVG: a stacked histogram of dilution counts by cluster and
// a Manhattan plot. Companion CSV files carry the plotted data.

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "micmix/gwas.hpp"

namespace micmix
{

namespace detail
{

inline std::string svg_num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline const char *cluster_colour(int cluster)
{
  static const char *palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                  "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};
  return palette[(cluster - 1) % 8];
}

} // namespace detail

// counts[cell][cluster - 1]; labels are the x-axis tick texts per cell.
inline std::string histogram_svg(const std::string &title,
                                 const std::vector<std::vector<int>> &counts,
                                 const std::vector<std::string> &labels)
{
  const double width = 640, height = 360, left = 50, bottom = 40, top = 30;
  int tallest = 1;
  for (const auto &cell : counts)
  {
    int s = 0;
    for (int c : cell)
      s += c;
    tallest = std::max(tallest, s);
  }
  const double plot_h = height - bottom - top;
  const double bar_w = (width - left - 10) / static_cast<double>(std::max<std::size_t>(counts.size(), 1));
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t j = 0; j < counts.size(); ++j)
  {
    double y = height - bottom;
    const double x = left + bar_w * static_cast<double>(j);
    for (std::size_t c = 0; c < counts[j].size(); ++c)
    {
      const double h = plot_h * counts[j][c] / tallest;
      if (h <= 0.0)
        continue;
      y -= h;
      out << "<rect x=\"" << detail::svg_num(x + 1) << "\" y=\"" << detail::svg_num(y)
          << "\" width=\"" << detail::svg_num(bar_w - 2) << "\" height=\"" << detail::svg_num(h)
          << "\" fill=\"" << detail::cluster_colour(static_cast<int>(c) + 1) << "\"/>\n";
    }
    if (j < labels.size())
      out << "<text x=\"" << detail::svg_num(x + bar_w / 2) << "\" y=\"" << height - bottom + 15
          << "\" font-size=\"10\" text-anchor=\"middle\">" << labels[j] << "</text>\n";
  }
  out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - 10
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << left << "\" y=\"" << height - 5 << "\" font-size=\"11\">log2 MIC</text>\n";
  out << "</svg>\n";
  return out.str();
}

inline std::string manhattan_svg(const GwasResult &result)
{
  const double width = 800, height = 360, left = 50, bottom = 40, top = 20;
  const double plot_w = width - left - 10, plot_h = height - bottom - top;
  const double y_max = -std::log10(kManhattanFloor);
  long long lo = 0, hi = 1;
  if (!result.variants.empty())
  {
    lo = result.variants.front().position;
    hi = std::max(result.variants.back().position, lo + 1);
  }
  auto px = [&](long long pos) {
    return left + plot_w * static_cast<double>(pos - lo) / static_cast<double>(hi - lo);
  };
  auto py = [&](double score) { return height - bottom - plot_h * score / y_max; };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  for (const auto &v : result.variants)
    out << "<circle cx=\"" << detail::svg_num(px(v.position)) << "\" cy=\""
        << detail::svg_num(py(v.score)) << "\" r=\"2\" fill=\""
        << (v.significant ? "#c44e52" : "#4c72b0") << "\"/>\n";
  const double line = py(result.threshold_line());
  out << "<line x1=\"" << left << "\" y1=\"" << detail::svg_num(line) << "\" x2=\"" << width - 10
      << "\" y2=\"" << detail::svg_num(line) << "\" stroke=\"red\" stroke-dasharray=\"4\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - 10
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << left << "\" y=\"" << height - 5
      << "\" font-size=\"11\">position; y = -log10(1 - PIP)</text>\n";
  out << "</svg>\n";
  return out.str();
}

} // namespace micmix
