#include "ledgerscope/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ledgerscope/common.hpp"

namespace ledgerscope::svg {

namespace {

constexpr double kPanelWidth = 520;
constexpr double kPanelHeight = 320;
constexpr double kMarginLeft = 70;
constexpr double kMarginRight = 20;
constexpr double kMarginTop = 36;
constexpr double kMarginBottom = 60;

std::string escape(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v, bool time_axis) {
  if (time_axis) return to_iso(day_of(static_cast<std::int64_t>(std::llround(v))));
  return fmt::format("{:.4g}", v);
}

void render_panel(std::string& out, const Panel& panel, double ox, double oy) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  for (const auto& line : panel.lines) {
    for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i) {
      if (!std::isfinite(line.y[i])) continue;
      x_lo = std::min(x_lo, line.x[i]);
      x_hi = std::max(x_hi, line.x[i]);
      y_lo = std::min(y_lo, line.y[i]);
      y_hi = std::max(y_hi, line.y[i]);
    }
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0;
    x_hi = 1;
    y_lo = 0;
    y_hi = 1;
  }
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) {
    y_hi += 0.5;
    y_lo -= 0.5;
  }
  const double pw = kPanelWidth - kMarginLeft - kMarginRight;
  const double ph = kPanelHeight - kMarginTop - kMarginBottom;
  const double left = ox + kMarginLeft;
  const double top = oy + kMarginTop;
  auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  out += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="14" text-anchor="middle">{}</text>)" "\n",
                     ox + kPanelWidth / 2, oy + 20, escape(panel.title));
  out += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="none" stroke="#444"/>)" "\n",
                     left, top, pw, ph);
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_lo + (x_hi - x_lo) * k / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * k / 4.0;
    out += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="middle">{}</text>)" "\n", sx(fx),
                       top + ph + 14, escape(tick_label(fx, panel.time_axis)));
    out += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10" text-anchor="end">{}</text>)" "\n", left - 4,
                       sy(fy) + 3, escape(tick_label(fy, false)));
  }
  out += fmt::format(R"svg(<text x="{:.1f}" y="{:.1f}" font-size="11" transform="rotate(-90 {:.1f} {:.1f})" text-anchor="middle">{}</text>)svg" "\n",
                     ox + 14, top + ph / 2, ox + 14, top + ph / 2, escape(panel.y_label));

  for (const auto& marker : panel.markers) {
    if (marker.x < x_lo || marker.x > x_hi) continue;
    out += fmt::format(R"(<line x1="{0:.1f}" y1="{1:.1f}" x2="{0:.1f}" y2="{2:.1f}" stroke="red" stroke-dasharray="5,4"/>)" "\n",
                       sx(marker.x), top, top + ph);
    out += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="9" fill="red">{}</text>)" "\n", sx(marker.x) + 2,
                       top + 10, escape(marker.label));
  }

  double legend_y = top + ph + 30;
  double legend_x = left;
  for (const auto& line : panel.lines) {
    std::string points;
    for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i) {
      if (!std::isfinite(line.y[i])) continue;
      points += fmt::format("{:.1f},{:.1f} ", sx(line.x[i]), sy(line.y[i]));
    }
    if (!points.empty()) points.pop_back();
    out += fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.3"{} points="{}"/>)" "\n", line.color,
                       line.dashed ? R"( stroke-dasharray="4,3")" : "", points);
    out += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="10" height="3" fill="{}"/>)" "\n", legend_x, legend_y - 3,
                       line.color);
    out += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="9">{}</text>)" "\n", legend_x + 13, legend_y,
                       escape(line.name));
    legend_x += 14 + 6.0 * static_cast<double>(line.name.size()) + 10;
    if (legend_x > ox + kPanelWidth - 80) {
      legend_x = left;
      legend_y += 12;
    }
  }
}

}  // namespace

std::string palette(std::size_t i) {
  static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kColors[i % std::size(kColors)];
}

std::string render(const std::string& title, std::span<const Panel> panels, std::size_t columns) {
  columns = std::max<std::size_t>(1, std::min(columns, std::max<std::size_t>(1, panels.size())));
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double width = kPanelWidth * static_cast<double>(columns);
  const double height = 30 + kPanelHeight * static_cast<double>(std::max<std::size_t>(rows, 1));
  std::string out = fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0:.0f}" height="{1:.0f}" viewBox="0 0 {0:.0f} {1:.0f}" font-family="sans-serif">)" "\n",
      width, height);
  out += fmt::format(R"(<rect width="100%" height="100%" fill="white"/>)" "\n");
  out += fmt::format(R"(<text x="{:.1f}" y="20" font-size="16" text-anchor="middle">{}</text>)" "\n", width / 2, escape(title));
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(out, panels[i], kPanelWidth * static_cast<double>(i % columns), 30 + kPanelHeight * static_cast<double>(i / columns));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ledgerscope::svg
