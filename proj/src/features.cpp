#include "ledgerscope/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>

#include <fmt/format.h>

namespace ledgerscope {

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::centrality: return "Centrality";
    case FeatureSet::asset: return "Asset";
    case FeatureSet::rank: return "Rank";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "centrality") return FeatureSet::centrality;
  if (lower == "asset") return FeatureSet::asset;
  if (lower == "rank") return FeatureSet::rank;
  throw ValidationError(fmt::format("unknown feature set '{}' (expected Centrality, Asset or Rank)", name));
}

std::string feature_sets_label(std::span<const FeatureSet> sets) {
  std::string label;
  for (const auto s : sets) {
    if (!label.empty()) label += '+';
    label += to_string(s);
  }
  return label;
}

std::vector<DailyAggregate> aggregate_daily(std::span<const TimedValue> values) {
  struct Acc {
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
  };
  std::map<Day, Acc> by_day;
  for (const auto& v : values) {
    auto& acc = by_day[day_of(v.time)];
    acc.sum += v.value;
    acc.min = std::min(acc.min, v.value);
    acc.max = std::max(acc.max, v.value);
    ++acc.count;
  }
  std::vector<DailyAggregate> out;
  out.reserve(by_day.size());
  for (const auto& [day, acc] : by_day) out.push_back({day, acc.sum / static_cast<double>(acc.count), acc.min, acc.max});
  return out;
}

std::vector<DailySeries> daily_stat_columns(FeatureSet set, const std::string& metric, std::span<const TimedValue> values) {
  const auto daily = aggregate_daily(values);
  const auto prefix = std::string(to_string(set));
  std::string lowered = prefix;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::vector<DailySeries> columns{{fmt::format("{}:{}:avg", lowered, metric), set, {}},
                                   {fmt::format("{}:{}:min", lowered, metric), set, {}},
                                   {fmt::format("{}:{}:max", lowered, metric), set, {}}};
  for (const auto& d : daily) {
    columns[0].values[d.day] = d.avg;
    columns[1].values[d.day] = d.min;
    columns[2].values[d.day] = d.max;
  }
  return columns;
}

TargetSeries read_target_csv(std::istream& in, std::string name) {
  TargetSeries target;
  target.name = std::move(name);
  std::string row;
  std::size_t line = 0;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty() || (line == 1 && row.starts_with("date"))) continue;
    const auto comma = row.find(',');
    if (comma == std::string::npos) throw ParseError(line, "expected date,value");
    Day day;
    try {
      day = parse_iso_day(std::string_view(row).substr(0, comma));
    } catch (const ValidationError& e) {
      throw ParseError(line, e.what());
    }
    const std::string_view text = std::string_view(row).substr(comma + 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) throw ParseError(line, fmt::format("bad value '{}'", text));
    if (!target.values.emplace(day, value).second) throw ParseError(line, fmt::format("duplicate date {}", to_iso(day)));
  }
  return target;
}

FeatureMatrix FeatureMatrix::slice(std::size_t begin, std::size_t end) const {
  FeatureMatrix part;
  part.names = names;
  part.sets = sets;
  part.target_name = target_name;
  part.selection = selection;
  part.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(begin), dates.begin() + static_cast<std::ptrdiff_t>(end));
  part.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end));
  part.target.assign(target.begin() + static_cast<std::ptrdiff_t>(begin), target.begin() + static_cast<std::ptrdiff_t>(end));
  return part;
}

FeatureMatrix assemble_features(std::span<const DailySeries> available, std::span<const FeatureSet> sets,
                                const TargetSeries& target) {
  if (sets.empty()) throw ValidationError("select at least one feature set");
  FeatureMatrix m;
  m.target_name = target.name;
  m.selection.assign(sets.begin(), sets.end());
  std::vector<const DailySeries*> chosen;
  for (const auto set : sets) {
    std::size_t found = 0;
    for (const auto& column : available) {
      if (column.set == set) {
        chosen.push_back(&column);
        ++found;
      }
    }
    if (found == 0) throw ValidationError(fmt::format("feature set {} has no columns", to_string(set)));
  }
  for (const auto* column : chosen) {
    m.names.push_back(column->name);
    m.sets.push_back(column->set);
  }

  std::size_t dropped = 0;
  for (const auto& [day, y] : target.values) {
    std::vector<double> row;
    row.reserve(chosen.size());
    bool complete = std::isfinite(y);
    for (const auto* column : chosen) {
      const auto it = column->values.find(day);
      if (it == column->values.end() || !std::isfinite(it->second)) {
        complete = false;
        break;
      }
      row.push_back(it->second);
    }
    if (!complete) {
      ++dropped;
      continue;
    }
    m.dates.push_back(day);
    m.rows.push_back(std::move(row));
    m.target.push_back(y);
  }
  if (m.dates.empty()) throw ValidationError("feature columns and target share no complete dates");
  if (dropped > 0) log_info(fmt::format("features: {} target dates dropped for missing cells", dropped));
  return m;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "date";
  for (const auto& name : m.names) out << ',' << name;
  out << ',' << m.target_name << '\n';
  for (std::size_t i = 0; i < m.row_count(); ++i) {
    out << to_iso(m.dates[i]);
    for (const double v : m.rows[i]) out << ',' << format_real(v);
    out << ',' << format_real(m.target[i]) << '\n';
  }
}

SplitBounds split_bounds(std::size_t rows) {
  if (rows < 10) throw ValidationError(fmt::format("need at least 10 rows to split, have {}", rows));
  // floor(0.7 T) and floor(0.8 T) in integer arithmetic.
  return {rows * 7 / 10, rows * 8 / 10, rows};
}

DatasetSplit split_dataset(const FeatureMatrix& m) {
  DatasetSplit split;
  split.bounds = split_bounds(m.row_count());
  split.train = m.slice(0, split.bounds.train_end);
  split.validation = m.slice(split.bounds.train_end, split.bounds.val_end);
  split.test = m.slice(split.bounds.val_end, split.bounds.rows);
  return split;
}

ErrorMetrics evaluate(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError(fmt::format("prediction length {} differs from truth length {}", predicted.size(), truth.size()));
  }
  if (predicted.empty()) throw ValidationError("cannot evaluate an empty prediction");
  double se = 0.0;
  double ae = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    se += d * d;
    ae += std::abs(d);
  }
  const auto n = static_cast<double>(predicted.size());
  return {se / n, ae / n};
}

std::string_view to_string(ForecastModel model) {
  return model == ForecastModel::persistence ? "persistence" : "linear_ar";
}

ForecastModel parse_forecast_model(std::string_view name) {
  if (name == "persistence") return ForecastModel::persistence;
  if (name == "linear_ar") return ForecastModel::linear_ar;
  throw ValidationError(fmt::format("unknown forecast model '{}' (expected persistence or linear_ar)", name));
}

std::vector<double> default_ridge_grid() { return {0.0, 1e-6, 1e-4, 1e-2, 1.0, 100.0}; }

void write_forecast_csv(std::ostream& out, std::span<const ForecastResult> results, std::span<const std::string> labels) {
  out << "model,T,S,features,MSE,MAE\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << fmt::format("{},{},{},{},{},{}\n", r.model, r.history, r.horizon, labels[i], format_real(r.mse), format_real(r.mae));
  }
}

}  // namespace ledgerscope
