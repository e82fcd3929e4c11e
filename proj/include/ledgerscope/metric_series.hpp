#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ledgerscope/common.hpp"

namespace ledgerscope {

// Time-indexed table of named scalar columns. Times are unix seconds; daily
// series use the first second of each day.
struct MetricSeries {
  std::vector<std::int64_t> times;
  std::vector<std::string> names;
  // columns[j][i] is column names[j] at times[i].
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return times.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const;
  void add_column(std::string name, std::vector<double> values);
};

}  // namespace ledgerscope
