#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace {
constexpr double W = 720, H = 480, L = 70, R = 20, T = 40, B = 50;

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}
}  // namespace

void write_svg(std::ostream& os, const ScatterPlot& p) {
  double x0 = 0, x1 = 1, y0 = p.ymin, y1 = p.ymax;
  if (!p.x.empty()) {
    const auto [a, b] = std::minmax_element(p.x.begin(), p.x.end());
    x0 = *a;
    x1 = *b;
  }
  if (!p.fixed_y && !p.y.empty()) {
    const auto [a, b] = std::minmax_element(p.y.begin(), p.y.end());
    y0 = *a;
    y1 = *b;
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pad = 0.03 * (y1 - y0);
  if (!p.fixed_y) {
    y0 -= pad;
    y1 += pad;
  }
  auto sx = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

  os << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n",
                    W, H);
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", W / 2, esc(p.title));
  os << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                    W - L - R, H - T - B);
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    os << fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", sx(xv), H - B + 16, xv);
    os << fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n", L - 4, sy(yv) + 4, yv);
  }
  os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (L + W - R) / 2, H - 12,
                    esc(p.xlabel));
  os << fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
                    (T + H - B) / 2, (T + H - B) / 2, esc(p.ylabel));
  for (double r : p.rules) {
    if (r < y0 || r > y1) continue;
    os << fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n",
                      L, W - R, sy(r), sy(r));
  }
  for (std::size_t i = 0; i < p.x.size() && i < p.y.size(); ++i) {
    os << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1\"/>\n", sx(p.x[i]), sy(p.y[i]));
  }
  os << "</svg>\n";
}
