#pragma once

#include <span>
#include <string>
#include <vector>

namespace ledgerscope::svg {

struct Line {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool dashed = false;
};

struct Marker {
  double x = 0.0;
  std::string label;
};

struct Panel {
  std::string title;
  std::string y_label;
  std::vector<Line> lines;
  // Vertical red dashed lines.
  std::vector<Marker> markers;
  // x values are unix seconds and get date tick labels.
  bool time_axis = true;
};

// Grid of panels, `columns` per row. Output is deterministic for equal input.
std::string render(const std::string& title, std::span<const Panel> panels, std::size_t columns = 2);

// Colour for the i-th line of a panel.
std::string palette(std::size_t i);

}  // namespace ledgerscope::svg
