#include "ledgerscope/metric_series.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace ledgerscope {

std::optional<std::size_t> MetricSeries::column_index(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

const std::vector<double>& MetricSeries::column(std::string_view name) const {
  const auto index = column_index(name);
  if (!index) throw Error(fmt::format("series has no column '{}'", name));
  return columns[*index];
}

void MetricSeries::add_column(std::string name, std::vector<double> values) {
  if (values.size() != times.size()) {
    throw Error(fmt::format("column '{}' has {} rows, series has {}", name, values.size(), times.size()));
  }
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

}  // namespace ledgerscope
