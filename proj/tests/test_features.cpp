#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "ledgerscope/features.hpp"
#include "ledgerscope/rng.hpp"

using namespace ledgerscope;

namespace {

DailySeries series(std::string name, FeatureSet set, const std::map<Day, double>& values) {
  return {std::move(name), set, values};
}

// One feature column per set plus a target, all on days 0..n-1.
struct Fixture {
  std::vector<DailySeries> available;
  TargetSeries target;
};

Fixture linear_fixture(std::size_t n, double slope = 2.0, double intercept = 5.0) {
  Fixture f;
  std::map<Day, double> c, a, r, t;
  for (std::size_t i = 0; i < n; ++i) {
    const Day d{static_cast<std::int32_t>(i)};
    c[d] = static_cast<double>(i);
    a[d] = static_cast<double>(i % 7);
    r[d] = 0.5;
    t[d] = intercept + slope * static_cast<double>(i);
  }
  f.available = {series("centrality:x:avg", FeatureSet::centrality, c), series("asset:y:value", FeatureSet::asset, a),
                 series("rank:z:top", FeatureSet::rank, r)};
  f.target = {"target:t", t};
  return f;
}

FeatureMatrix matrix_of(const std::vector<double>& target) {
  Fixture f;
  std::map<Day, double> c, t;
  for (std::size_t i = 0; i < target.size(); ++i) {
    c[Day{static_cast<std::int32_t>(i)}] = 1.0;
    t[Day{static_cast<std::int32_t>(i)}] = target[i];
  }
  f.available = {series("centrality:one:avg", FeatureSet::centrality, c)};
  f.target = {"target:t", t};
  const FeatureSet sets[] = {FeatureSet::centrality};
  return assemble_features(f.available, sets, f.target);
}

}  // namespace

TEST_CASE("daily aggregation") {
  const TimedValue one[] = {{100, 4.0}};
  const auto a = aggregate_daily(one);
  REQUIRE(a.size() == 1);
  CHECK(a[0].avg == 4.0);
  CHECK(a[0].min == 4.0);
  CHECK(a[0].max == 4.0);
  const TimedValue two[] = {{10, 1.0}, {20, 3.0}};
  const auto b = aggregate_daily(two);
  CHECK(b[0].avg == 2.0);
  CHECK(b[0].min == 1.0);
  CHECK(b[0].max == 3.0);
}

TEST_CASE("daily aggregation matches a group-by") {
  Rng rng(30);
  std::vector<TimedValue> stream;
  for (int i = 0; i < 500; ++i) {
    stream.push_back({static_cast<std::int64_t>(rng.below(30 * 86400)), rng.unit() * 10});
  }
  std::sort(stream.begin(), stream.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
  std::map<std::int64_t, std::vector<double>> groups;
  for (const auto& v : stream) groups[v.time / 86400].push_back(v.value);
  const auto agg = aggregate_daily(stream);
  REQUIRE(agg.size() == groups.size());
  std::size_t i = 0;
  for (const auto& [day, values] : groups) {
    double sum = 0;
    for (const double v : values) sum += v;
    CHECK(agg[i].day.value == day);
    CHECK(agg[i].avg == doctest::Approx(sum / values.size()).epsilon(1e-14));
    CHECK(agg[i].min == *std::min_element(values.begin(), values.end()));
    CHECK(agg[i].max == *std::max_element(values.begin(), values.end()));
    ++i;
  }
  const auto cols = daily_stat_columns(FeatureSet::centrality, "pagerank", stream);
  REQUIRE(cols.size() == 3);
  CHECK(cols[0].name == "centrality:pagerank:avg");
  CHECK(cols[1].name == "centrality:pagerank:min");
  CHECK(cols[2].name == "centrality:pagerank:max");
}

TEST_CASE("feature set selection and schemas") {
  const auto f = linear_fixture(20);
  const FeatureSet c[] = {FeatureSet::centrality};
  const auto only = assemble_features(f.available, c, f.target);
  CHECK(only.names == std::vector<std::string>{"centrality:x:avg"});
  const FeatureSet all[] = {FeatureSet::centrality, FeatureSet::asset, FeatureSet::rank};
  const auto full = assemble_features(f.available, all, f.target);
  CHECK(full.column_count() == 3);
  std::ostringstream csv;
  write_features_csv(csv, full);
  CHECK(csv.str().substr(0, csv.str().find('\n')) == "date,centrality:x:avg,asset:y:value,rank:z:top,target:t");
  CHECK(feature_sets_label(all) == "Centrality+Asset+Rank");
  CHECK(parse_feature_set("ASSET") == FeatureSet::asset);
  std::vector<DailySeries> no_rank(f.available.begin(), f.available.begin() + 2);
  CHECK_THROWS_AS(assemble_features(no_rank, all, f.target), ValidationError);
}

TEST_CASE("join drops dates missing any column") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DailySeries> cols;
    std::set<std::int32_t> common;
    for (int j = 0; j < 4; ++j) {
      std::map<Day, double> v;
      std::set<std::int32_t> days;
      for (std::int32_t d = 0; d < 40; ++d) {
        if (rng.chance(0.85)) {
          v[Day{d}] = d;
          days.insert(d);
        }
      }
      if (j == 0) {
        common = days;
      } else {
        std::set<std::int32_t> keep;
        std::set_intersection(common.begin(), common.end(), days.begin(), days.end(), std::inserter(keep, keep.end()));
        common = keep;
      }
      cols.push_back(series(fmt::format("centrality:m{}:avg", j), FeatureSet::centrality, v));
    }
    TargetSeries target{"target:t", {}};
    for (std::int32_t d = 0; d < 40; ++d) target.values[Day{d}] = d;
    const FeatureSet sets[] = {FeatureSet::centrality};
    if (common.empty()) {
      CHECK_THROWS_AS(assemble_features(cols, sets, target), ValidationError);
      continue;
    }
    const auto m = assemble_features(cols, sets, target);
    CHECK(m.row_count() == common.size());
  }
}

TEST_CASE("adding a feature set only drops rows and keeps the target") {
  auto f = linear_fixture(30);
  f.available[1].values.erase(Day{4});
  const FeatureSet c[] = {FeatureSet::centrality};
  const FeatureSet ca[] = {FeatureSet::centrality, FeatureSet::asset};
  const auto small = assemble_features(f.available, c, f.target);
  const auto big = assemble_features(f.available, ca, f.target);
  CHECK(big.row_count() == small.row_count() - 1);
  for (std::size_t i = 0, k = 0; i < small.row_count(); ++i) {
    if (small.dates[i] == Day{4}) continue;
    CHECK(big.dates[k] == small.dates[i]);
    CHECK(big.target[k] == small.target[i]);
    ++k;
  }
}

TEST_CASE("split boundaries") {
  CHECK(split_bounds(100).train_end == 70);
  CHECK(split_bounds(100).val_end == 80);
  CHECK(split_bounds(10).train_end == 7);
  CHECK(split_bounds(10).val_end == 8);
  CHECK_THROWS_AS(split_bounds(9), ValidationError);
  for (const std::size_t n : {10, 37, 100, 1000}) {
    const auto m = matrix_of(std::vector<double>(n, 1.0));
    const auto s = split_dataset(m);
    CHECK(s.train.row_count() + s.validation.row_count() + s.test.row_count() == n);
    CHECK(s.train.dates.back() < s.validation.dates.front());
    CHECK(s.validation.dates.back() < s.test.dates.front());
    auto sorted = m.dates;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == m.dates);
  }
}

TEST_CASE("evaluate") {
  const double x[] = {1, 2, 3};
  CHECK(evaluate(x, x).mse == 0.0);
  CHECK(evaluate(x, x).mae == 0.0);
  const double p[] = {1, -1};
  const double z[] = {0, 0};
  CHECK(evaluate(p, z).mse == 1.0);
  CHECK(evaluate(p, z).mae == 1.0);
  CHECK_THROWS_AS(evaluate(p, x), ValidationError);
  Rng rng(2);
  std::vector<double> a(257), b(257);
  for (auto& v : a) v = rng.unit();
  for (auto& v : b) v = rng.unit();
  double se = 0, ae = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    se += (a[i] - b[i]) * (a[i] - b[i]);
    ae += std::abs(a[i] - b[i]);
  }
  CHECK(std::abs(evaluate(a, b).mse - se / a.size()) <= 1e-12);
  CHECK(std::abs(evaluate(a, b).mae - ae / a.size()) <= 1e-12);
}

TEST_CASE("persistence on constant and step series") {
  const auto flat = forecast(ForecastModel::persistence, matrix_of(std::vector<double>(50, 3.0)), 4, 2);
  CHECK(flat.mse == 0.0);
  CHECK(flat.mae == 0.0);

  // Value jumps by 1 every 5 rows.
  std::vector<double> steps(60);
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = static_cast<double>(i / 5);
  const std::size_t horizon = 3;
  const auto r = forecast(ForecastModel::persistence, matrix_of(steps), 2, horizon);
  double abs_sum = 0;
  std::size_t count = 0;
  for (std::size_t w = 0; w < r.origins.size(); ++w) {
    const auto t = static_cast<std::size_t>(r.origins[w].value);
    for (std::size_t k = 0; k < horizon; ++k) {
      abs_sum += std::abs(steps[t + k] - steps[t - 1]);
      ++count;
    }
  }
  CHECK(r.mae == doctest::Approx(abs_sum / count).epsilon(1e-15));
  CHECK(r.mae > 0.0);
}

TEST_CASE("linear_ar recovers a noiseless trend") {
  for (const std::size_t history : {2, 3, 5}) {
    const auto f = linear_fixture(120, 0.75, -4.0);
    const FeatureSet sets[] = {FeatureSet::centrality, FeatureSet::asset};
    const auto m = assemble_features(f.available, sets, f.target);
    const auto r = forecast(ForecastModel::linear_ar, m, history, 1);
    CHECK(r.mse < 1e-6);
  }
}

TEST_CASE("test windows never read targets before the test range") {
  const auto m = matrix_of(std::vector<double>(100, 1.0));
  const auto r = forecast(ForecastModel::persistence, m, 5, 3);
  const auto b = split_bounds(100);
  for (const auto& o : r.origins) CHECK(static_cast<std::size_t>(o.value) >= b.val_end);
  CHECK(r.origins.size() == 100 - b.val_end - 3 + 1);
}

TEST_CASE("forecast report") {
  const auto m = matrix_of(std::vector<double>(40, 2.0));
  const ForecastResult results[] = {forecast(ForecastModel::persistence, m, 3, 1)};
  const std::string labels[] = {"Centrality"};
  std::ostringstream out;
  write_forecast_csv(out, results, labels);
  CHECK(out.str() == "model,T,S,features,MSE,MAE\npersistence,3,1,Centrality,0,0\n");
}
