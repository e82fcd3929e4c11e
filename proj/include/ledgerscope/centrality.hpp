#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ledgerscope/graphbuild.hpp"
#include "ledgerscope/metric_series.hpp"

namespace ledgerscope {

enum class Metric { betweenness, closeness, indegree, pagerank };

inline constexpr Metric kAllMetrics[] = {Metric::betweenness, Metric::closeness, Metric::indegree, Metric::pagerank};

std::string_view to_string(Metric metric);

// Values are aligned with GraphSnapshot::nodes() of the graph they came from.
struct CentralityMap {
  Metric metric = Metric::indegree;
  std::vector<double> values;
  // PageRank only: false when maxIter was reached before the tolerance.
  bool converged = true;
  std::size_t iterations = 0;

  bool empty() const { return values.empty(); }
};

// Number of distinct in-neighbours per node.
CentralityMap in_degree(const GraphSnapshot& g);

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-8;
  std::size_t max_iterations = 200;
};

// Power iteration on the weight-normalised transition matrix with uniform
// teleport; dangling mass is spread uniformly. Non-convergence is reported
// through CentralityMap::converged and a warning.
CentralityMap page_rank(const GraphSnapshot& g, const PageRankOptions& options = {});

// Directed, unweighted shortest-path betweenness via Brandes accumulation.
// With a pivot count below the node count, only that many sources (chosen
// with the seed) are expanded and the result is scaled by |V| / pivots.
CentralityMap betweenness(const GraphSnapshot& g, std::optional<std::size_t> pivots = std::nullopt,
                          std::uint64_t seed = 1);

struct BetweennessPolicy {
  std::size_t exact_threshold = 20'000;
  std::size_t pivots = 1'000;
  std::uint64_t seed = 1;
};

// Exact below the threshold, pivot-sampled above it.
CentralityMap betweenness(const GraphSnapshot& g, const BetweennessPolicy& policy);

// Harmonic out-closeness: sum over reachable u != v of 1 / dist(v, u).
CentralityMap closeness(const GraphSnapshot& g);

struct DispersionPoint {
  Metric metric = Metric::indegree;
  std::int64_t time = 0;
  double high = 0.0;
  double low = 0.0;
  double median = 0.0;
  double dispersion = 0.0;
};

inline constexpr double kDispersionEpsilon = 1e-6;

// d = log2(1 + (H - L) / max(M - L, eps * (H - L))), 0 when H == L.
// Throws ValidationError for an empty map.
DispersionPoint dispersion_rate(const CentralityMap& map, std::int64_t time = 0);

// Linear-interpolation percentile (p in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double p);

struct DatedCentrality {
  std::int64_t time = 0;
  CentralityMap map;
};

std::vector<double> default_percentiles();

// One row per dated map, one column "<metric>:p<percentile>" per percentile.
// Dates whose map is empty are omitted and logged.
MetricSeries percentile_series(std::span<const DatedCentrality> maps, std::span<const double> percentiles);

}  // namespace ledgerscope
