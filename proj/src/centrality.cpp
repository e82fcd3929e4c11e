#include "ledgerscope/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ledgerscope/rng.hpp"

namespace ledgerscope {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::betweenness: return "betweenness";
    case Metric::closeness: return "closeness";
    case Metric::indegree: return "indegree";
    case Metric::pagerank: return "pagerank";
  }
  return "?";
}

CentralityMap in_degree(const GraphSnapshot& g) {
  CentralityMap map;
  map.metric = Metric::indegree;
  map.values.assign(g.node_count(), 0.0);
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    // Self-edges (change back to a spender) are not in-neighbours.
    for (const auto u : g.predecessors(v)) {
      if (u != v) map.values[v] += 1.0;
    }
  }
  return map;
}

CentralityMap page_rank(const GraphSnapshot& g, const PageRankOptions& options) {
  if (!(options.damping > 0.0 && options.damping < 1.0)) throw ValidationError("PageRank damping must lie in (0,1)");
  CentralityMap map;
  map.metric = Metric::pagerank;
  const std::size_t n = g.node_count();
  if (n == 0) return map;

  std::vector<double> out_weight(n, 0.0);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (const double w : g.successor_weights(u)) out_weight[u] += w;
  }
  const double d = options.damping;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, inv_n);
  std::vector<double> next(n);
  map.converged = false;
  for (map.iterations = 1; map.iterations <= options.max_iterations; ++map.iterations) {
    double dangling = 0.0;
    for (std::uint32_t u = 0; u < n; ++u) {
      if (out_weight[u] <= 0.0) dangling += rank[u];
    }
    std::fill(next.begin(), next.end(), (1.0 - d) * inv_n + d * dangling * inv_n);
    for (std::uint32_t u = 0; u < n; ++u) {
      if (out_weight[u] <= 0.0) continue;
      const double share = d * rank[u] / out_weight[u];
      const auto targets = g.successors(u);
      const auto weights = g.successor_weights(u);
      for (std::size_t k = 0; k < targets.size(); ++k) next[targets[k]] += share * weights[k];
    }
    double residual = 0.0;
    for (std::size_t v = 0; v < n; ++v) residual += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (residual < options.tolerance) {
      map.converged = true;
      break;
    }
  }
  if (!map.converged) {
    map.iterations = options.max_iterations;
    log_warn(fmt::format("PageRank did not converge within {} iterations on {}", options.max_iterations,
                         g.window().label()));
  }
  const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
  for (auto& r : rank) r /= total;
  map.values = std::move(rank);
  return map;
}

namespace {

// Path counts and dependencies are accumulated in quad precision and rounded
// to double once, so small exact runs agree with rational arithmetic.
using Wide = __float128;

// Reusable per-source Brandes workspace.
class BrandesPass {
 public:
  explicit BrandesPass(const GraphSnapshot& g)
      : g_(g), sigma_(g.node_count()), dist_(g.node_count(), -1), delta_(g.node_count()), preds_(g.node_count()) {
    order_.reserve(g.node_count());
  }

  void accumulate(std::uint32_t source, std::vector<Wide>& centrality) {
    for (const auto v : order_) {
      sigma_[v] = 0.0;
      dist_[v] = -1;
      delta_[v] = 0.0;
      preds_[v].clear();
    }
    order_.clear();
    sigma_[source] = 1.0;
    dist_[source] = 0;
    order_.push_back(source);
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const auto v = order_[head];
      for (const auto w : g_.successors(v)) {
        if (dist_[w] < 0) {
          dist_[w] = dist_[v] + 1;
          order_.push_back(w);
        }
        if (dist_[w] == dist_[v] + 1) {
          sigma_[w] += sigma_[v];
          preds_[w].push_back(v);
        }
      }
    }
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const auto w = *it;
      for (const auto v : preds_[w]) delta_[v] += sigma_[v] / sigma_[w] * (Wide(1) + delta_[w]);
      if (w != source) centrality[w] += delta_[w];
    }
  }

 private:
  const GraphSnapshot& g_;
  std::vector<Wide> sigma_;
  std::vector<std::int64_t> dist_;
  std::vector<Wide> delta_;
  std::vector<std::vector<std::uint32_t>> preds_;
  std::vector<std::uint32_t> order_;
};

}  // namespace

CentralityMap betweenness(const GraphSnapshot& g, std::optional<std::size_t> pivots, std::uint64_t seed) {
  CentralityMap map;
  map.metric = Metric::betweenness;
  const std::size_t n = g.node_count();
  map.values.assign(n, 0.0);
  if (n == 0) return map;

  std::vector<std::uint32_t> sources(n);
  std::iota(sources.begin(), sources.end(), 0u);
  double scale = 1.0;
  if (pivots && *pivots < n) {
    if (*pivots == 0) throw ValidationError("betweenness pivot sample must be positive");
    Rng rng(seed);
    rng.shuffle(std::span<std::uint32_t>(sources));
    sources.resize(*pivots);
    std::sort(sources.begin(), sources.end());
    scale = static_cast<double>(n) / static_cast<double>(*pivots);
  }
  BrandesPass pass(g);
  std::vector<Wide> total(n, Wide(0));
  for (const auto s : sources) pass.accumulate(s, total);
  for (std::size_t v = 0; v < n; ++v) map.values[v] = static_cast<double>(total[v]) * scale;
  return map;
}

CentralityMap betweenness(const GraphSnapshot& g, const BetweennessPolicy& policy) {
  if (g.node_count() > policy.exact_threshold) return betweenness(g, policy.pivots, policy.seed);
  return betweenness(g, std::nullopt, policy.seed);
}

CentralityMap closeness(const GraphSnapshot& g) {
  CentralityMap map;
  map.metric = Metric::closeness;
  const std::size_t n = g.node_count();
  map.values.assign(n, 0.0);
  std::vector<std::int64_t> dist(n, -1);
  std::vector<std::uint32_t> queue;
  queue.reserve(n);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (const auto u : queue) dist[u] = -1;
    queue.clear();
    dist[v] = 0;
    queue.push_back(v);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto x = queue[head];
      for (const auto y : g.successors(x)) {
        if (dist[y] < 0) {
          dist[y] = dist[x] + 1;
          queue.push_back(y);
        }
      }
    }
    // Summed in node order so the result does not depend on BFS order.
    std::sort(queue.begin(), queue.end());
    double sum = 0.0;
    for (const auto u : queue) {
      if (u != v) sum += 1.0 / static_cast<double>(dist[u]);
    }
    map.values[v] = sum;
  }
  return map;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) throw ValidationError(fmt::format("percentile {} outside [0,100]", p));
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

DispersionPoint dispersion_rate(const CentralityMap& map, std::int64_t time) {
  if (map.values.empty()) throw ValidationError("dispersion rate of an empty centrality map");
  DispersionPoint point;
  point.metric = map.metric;
  point.time = time;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  point.low = *lo;
  point.high = *hi;
  point.median = percentile(map.values, 50.0);
  const double range = point.high - point.low;
  if (range <= 0.0) {
    point.dispersion = 0.0;
    return point;
  }
  const double spread = std::max(point.median - point.low, kDispersionEpsilon * range);
  point.dispersion = std::log2(1.0 + range / spread);
  return point;
}

std::vector<double> default_percentiles() { return {50.0, 90.0, 99.0, 99.9}; }

MetricSeries percentile_series(std::span<const DatedCentrality> maps, std::span<const double> percentiles) {
  for (const double p : percentiles) {
    if (!(p >= 0.0 && p <= 100.0)) throw ValidationError(fmt::format("percentile {} outside [0,100]", p));
  }
  MetricSeries series;
  if (maps.empty()) return series;
  const Metric metric = maps.front().map.metric;
  std::vector<std::vector<double>> columns(percentiles.size());
  for (const auto& dated : maps) {
    if (dated.map.metric != metric) throw ValidationError("percentile series mixes centrality metrics");
    if (dated.map.empty()) {
      log_info(fmt::format("{}: no nodes at {}, row omitted", to_string(metric), to_iso_timestamp(dated.time)));
      continue;
    }
    std::vector<double> sorted = dated.map.values;
    std::sort(sorted.begin(), sorted.end());
    series.times.push_back(dated.time);
    for (std::size_t k = 0; k < percentiles.size(); ++k) columns[k].push_back(percentile(sorted, percentiles[k]));
  }
  for (std::size_t k = 0; k < percentiles.size(); ++k) {
    series.add_column(fmt::format("{}:p{}", to_string(metric), format_real(percentiles[k])), std::move(columns[k]));
  }
  return series;
}

}  // namespace ledgerscope
