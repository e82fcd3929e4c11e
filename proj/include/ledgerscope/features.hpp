#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ledgerscope/common.hpp"

namespace ledgerscope {

enum class FeatureSet { centrality, asset, rank };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);
// "Centrality+Asset" style label of a set selection.
std::string feature_sets_label(std::span<const FeatureSet> sets);

struct TimedValue {
  std::int64_t time = 0;
  double value = 0.0;
};

struct DailyAggregate {
  Day day;
  double avg = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Groups values by UTC day. Days without values produce no row.
std::vector<DailyAggregate> aggregate_daily(std::span<const TimedValue> values);

// One named daily column. Names follow "set:metric:stat".
struct DailySeries {
  std::string name;
  FeatureSet set = FeatureSet::centrality;
  std::map<Day, double> values;
};

// avg/min/max columns "centrality:<metric>:<stat>" from block-level values.
std::vector<DailySeries> daily_stat_columns(FeatureSet set, const std::string& metric, std::span<const TimedValue> values);

struct TargetSeries {
  std::string name;
  std::map<Day, double> values;
};

// Reads "date,value" rows (header optional).
TargetSeries read_target_csv(std::istream& in, std::string name);

struct FeatureMatrix {
  std::vector<Day> dates;
  std::vector<std::string> names;
  std::vector<FeatureSet> sets;
  // rows[i][j] is feature names[j] on dates[i].
  std::vector<std::vector<double>> rows;
  std::string target_name;
  std::vector<double> target;
  std::vector<FeatureSet> selection;

  std::size_t row_count() const { return dates.size(); }
  std::size_t column_count() const { return names.size(); }
  FeatureMatrix slice(std::size_t begin, std::size_t end) const;
};

// Inner join on date of every column in the selected sets plus the target.
// Throws ValidationError if a selected set has no columns or the join is empty.
FeatureMatrix assemble_features(std::span<const DailySeries> available, std::span<const FeatureSet> sets,
                                const TargetSeries& target);

void write_features_csv(std::ostream& out, const FeatureMatrix& m);

// Chronological 70/10/20 boundaries: train [0, train_end), validation
// [train_end, val_end), test [val_end, rows).
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t rows = 0;
};

// Throws ValidationError below 10 rows.
SplitBounds split_bounds(std::size_t rows);

struct DatasetSplit {
  SplitBounds bounds;
  FeatureMatrix train;
  FeatureMatrix validation;
  FeatureMatrix test;
};

DatasetSplit split_dataset(const FeatureMatrix& m);

struct ErrorMetrics {
  double mse = 0.0;
  double mae = 0.0;
};

// Throws ValidationError on length mismatch or empty input.
ErrorMetrics evaluate(std::span<const double> predicted, std::span<const double> truth);

enum class ForecastModel { persistence, linear_ar };

std::string_view to_string(ForecastModel model);
ForecastModel parse_forecast_model(std::string_view name);

struct ForecastResult {
  std::string model;
  std::size_t history = 0;
  std::size_t horizon = 0;
  // One entry per test window, each of length horizon.
  std::vector<Day> origins;
  std::vector<std::vector<double>> predictions;
  std::vector<std::vector<double>> truths;
  double mse = 0.0;
  double mae = 0.0;
  double ridge_lambda = 0.0;
  // Set when the unpenalised design was singular and the ridge floor was used.
  bool ridge_floor_applied = false;
};

inline constexpr double kRidgeFloor = 1e-10;

std::vector<double> default_ridge_grid();

// Splits m 70/10/20 and scores every test window (targets inside the test
// range; history may reach back into earlier ranges). Inputs are the feature
// columns plus the target, z-scored with training statistics. linear_ar fits
// ridge regression on flattened (history x columns) windows from the training
// range and picks the penalty on the validation range. Errors are on the
// original target scale.
ForecastResult forecast(ForecastModel model, const FeatureMatrix& m, std::size_t history, std::size_t horizon,
                        std::span<const double> ridge_grid = {});

void write_forecast_csv(std::ostream& out, std::span<const ForecastResult> results, std::span<const std::string> labels);

}  // namespace ledgerscope
