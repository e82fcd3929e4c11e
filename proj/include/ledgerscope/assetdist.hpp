#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ledgerscope/ledger.hpp"
#include "ledgerscope/metric_series.hpp"

namespace ledgerscope {

struct ProportionPoint {
  std::size_t x = 0;
  double proportion = 0.0;
};

// Share of total supply held by the top-x addresses, per cutoff x.
struct ProportionCurve {
  Day date;
  std::vector<ProportionPoint> points;
};

// 500, 1000, ..., 5000.
std::vector<std::size_t> default_top_x_grid();

// xs must be ascending and supply positive. Cutoffs beyond the ranking size
// use the full ranking sum.
ProportionCurve proportion_curve(const RankingList& ranking, Satoshi supply, std::span<const std::size_t> xs);

struct AdjacentDelta {
  std::size_t from = 0;
  std::size_t to = 0;
  double delta = 0.0;
};

// proportion(x_{k+1}) - proportion(x_k). Needs at least two points.
std::vector<AdjacentDelta> adjacent_differences(const ProportionCurve& curve);

enum class ShareBasis {
  // Cumulative share within the top-N pool; the equality line is attainable.
  pool,
  // Cumulative share of the global supply; not bounded to [0, 1].
  supply,
};

struct DecentralizationPoint {
  Day date;
  // 1 - 2 * area between the cumulative top-share curve and the equality
  // line on the unit rank axis (trapezoidal rule over N + 1 points).
  double d_a = 0.0;
  // 1 - integral over the raw rank axis [0, N], without normalisation.
  double d_a_unnormalized = 0.0;
  std::size_t n = 0;
};

// Throws ValidationError for an empty ranking or a zero total.
DecentralizationPoint decentralization_degree_asset(const RankingList& ranking, ShareBasis basis = ShareBasis::pool,
                                                    Satoshi supply = 0);

struct PhaseBoundaries {
  // Start day and label of each phase, ascending by day.
  std::vector<std::pair<Day, std::string>> starts;

  static PhaseBoundaries defaults();
  // Label of the phase containing the day, or "none" before the first start.
  std::string label_for(Day day) const;
};

struct PhaseCriteria {
  // Columns: C1 (share held by the largest cutoff), C2 (largest adjacent
  // delta), dC1 and dC2 (first differences, 0 on the first row).
  MetricSeries series;
  std::vector<std::string> phases;
};

// Needs at least two curves.
PhaseCriteria phase_criteria(std::span<const ProportionCurve> curves, const PhaseBoundaries& boundaries);

}  // namespace ledgerscope
