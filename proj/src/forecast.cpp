#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ledgerscope/features.hpp"

namespace ledgerscope {

namespace {

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  // Column j of the input table: features 0..N-1, then the target.
  static Standardizer fit(const FeatureMatrix& m, std::size_t rows) {
    const std::size_t cols = m.column_count() + 1;
    Standardizer s{std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0)};
    for (std::size_t j = 0; j < cols; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rows; ++i) sum += value(m, i, j);
      const double mean = sum / static_cast<double>(rows);
      double ss = 0.0;
      for (std::size_t i = 0; i < rows; ++i) ss += (value(m, i, j) - mean) * (value(m, i, j) - mean);
      const double sd = std::sqrt(ss / static_cast<double>(rows));
      s.mean[j] = mean;
      // Columns constant over the training range are only centred.
      s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  static double value(const FeatureMatrix& m, std::size_t i, std::size_t j) {
    return j < m.column_count() ? m.rows[i][j] : m.target[i];
  }

  double z(const FeatureMatrix& m, std::size_t i, std::size_t j) const { return (value(m, i, j) - mean[j]) / scale[j]; }
};

// Window origins t (first predicted row) with history and targets inside
// [lo, hi).
std::vector<std::size_t> origins(std::size_t lo, std::size_t hi, std::size_t history, std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t t = std::max(lo, history); t + horizon <= hi; ++t) out.push_back(t);
  return out;
}

Eigen::MatrixXd design(const FeatureMatrix& m, const Standardizer& s, std::span<const std::size_t> ts, std::size_t history) {
  const std::size_t width = m.column_count() + 1;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ts.size()), static_cast<Eigen::Index>(history * width + 1));
  for (std::size_t w = 0; w < ts.size(); ++w) {
    Eigen::Index c = 0;
    for (std::size_t r = ts[w] - history; r < ts[w]; ++r) {
      for (std::size_t j = 0; j < width; ++j) x(static_cast<Eigen::Index>(w), c++) = s.z(m, r, j);
    }
    x(static_cast<Eigen::Index>(w), c) = 1.0;
  }
  return x;
}

Eigen::MatrixXd responses(const FeatureMatrix& m, const Standardizer& s, std::span<const std::size_t> ts, std::size_t horizon) {
  const std::size_t target = m.column_count();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(ts.size()), static_cast<Eigen::Index>(horizon));
  for (std::size_t w = 0; w < ts.size(); ++w) {
    for (std::size_t k = 0; k < horizon; ++k) y(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(k)) = s.z(m, ts[w] + k, target);
  }
  return y;
}

Eigen::MatrixXd ridge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd a(x.rows() + p, p);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(x.rows() + p, y.cols());
  a.topRows(x.rows()) = x;
  a.bottomRows(p) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(p, p);
  b.topRows(x.rows()) = y;
  return a.completeOrthogonalDecomposition().solve(b);
}

double standardized_mse(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, const Eigen::MatrixXd& y) {
  return (x * w - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

ForecastResult forecast(ForecastModel model, const FeatureMatrix& m, std::size_t history, std::size_t horizon,
                        std::span<const double> ridge_grid) {
  if (history == 0 || horizon == 0) throw ValidationError("forecast history and horizon must be positive");
  const SplitBounds bounds = split_bounds(m.row_count());
  ForecastResult result;
  result.model = std::string(to_string(model));
  result.history = history;
  result.horizon = horizon;

  const auto test = origins(bounds.val_end, bounds.rows, history, horizon);
  if (test.empty()) {
    throw ValidationError(fmt::format("{} rows leave no test window for T={} S={}", m.row_count(), history, horizon));
  }
  const Standardizer s = Standardizer::fit(m, bounds.train_end);
  const std::size_t target = m.column_count();

  Eigen::MatrixXd weights;
  if (model == ForecastModel::linear_ar) {
    const auto train = origins(0, bounds.train_end, history, horizon);
    if (train.empty()) {
      throw ValidationError(fmt::format("training range of {} rows is too short for T={} S={}", bounds.train_end, history, horizon));
    }
    const Eigen::MatrixXd x = design(m, s, train, history);
    const Eigen::MatrixXd y = responses(m, s, train, horizon);
    const std::vector<double> grid = ridge_grid.empty() ? default_ridge_grid() : std::vector<double>(ridge_grid.begin(), ridge_grid.end());

    const auto val = origins(bounds.train_end, bounds.val_end, history, horizon);
    double best_lambda = grid.front();
    if (!val.empty()) {
      const Eigen::MatrixXd xv = design(m, s, val, history);
      const Eigen::MatrixXd yv = responses(m, s, val, horizon);
      double best = std::numeric_limits<double>::infinity();
      for (const double lambda : grid) {
        const double err = standardized_mse(xv, ridge(x, y, std::max(lambda, kRidgeFloor)), yv);
        if (err < best) {
          best = err;
          best_lambda = lambda;
        }
      }
    } else {
      log_info("forecast: no validation window, using the first ridge penalty");
    }
    double lambda = best_lambda;
    if (lambda <= 0.0) {
      const Eigen::Index rank = x.completeOrthogonalDecomposition().rank();
      if (rank < x.cols()) {
        log_warn(fmt::format("forecast: singular design (rank {} of {}), ridge floor {} applied", rank, x.cols(), kRidgeFloor));
        result.ridge_floor_applied = true;
      }
      lambda = kRidgeFloor;
    }
    result.ridge_lambda = lambda;
    weights = ridge(x, y, lambda);
  }

  std::vector<double> flat_pred;
  std::vector<double> flat_truth;
  const Eigen::MatrixXd xt = model == ForecastModel::linear_ar ? design(m, s, test, history) : Eigen::MatrixXd();
  const Eigen::MatrixXd zt = model == ForecastModel::linear_ar ? Eigen::MatrixXd(xt * weights) : Eigen::MatrixXd();
  for (std::size_t w = 0; w < test.size(); ++w) {
    const std::size_t t = test[w];
    std::vector<double> pred(horizon);
    std::vector<double> truth(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
      truth[k] = m.target[t + k];
      pred[k] = model == ForecastModel::persistence
                    ? m.target[t - 1]
                    : zt(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(k)) * s.scale[target] + s.mean[target];
    }
    flat_pred.insert(flat_pred.end(), pred.begin(), pred.end());
    flat_truth.insert(flat_truth.end(), truth.begin(), truth.end());
    result.origins.push_back(m.dates[t]);
    result.predictions.push_back(std::move(pred));
    result.truths.push_back(std::move(truth));
  }
  const auto errors = evaluate(flat_pred, flat_truth);
  result.mse = errors.mse;
  result.mae = errors.mae;
  return result;
}

}  // namespace ledgerscope
