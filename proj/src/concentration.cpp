#include "ledgerscope/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>
#include <gmpxx.h>

#include "ledgerscope/rng.hpp"

namespace ledgerscope {

std::string_view to_string(EntityMode mode) { return mode == EntityMode::a1_per_address ? "A1" : "A2"; }

EntityMode parse_entity_mode(std::string_view name) {
  if (name == "A1" || name == "a1") return EntityMode::a1_per_address;
  if (name == "A2" || name == "a2") return EntityMode::a2_clustered;
  throw ValidationError(fmt::format("unknown entity mode '{}' (expected A1 or A2)", name));
}

namespace {

// Correctly rounded when numerator and denominator are exactly representable.
double to_double(const mpq_class& q) {
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  if (mpz_sizeinbase(num.get_mpz_t(), 2) <= 53 && mpz_sizeinbase(den.get_mpz_t(), 2) <= 53) {
    return num.get_d() / den.get_d();
  }
  return q.get_d();
}

}  // namespace

double hhi(const EntityHoldings& holdings) {
  if (holdings.supply <= 0) throw ValidationError("HHI needs positive supply");
  mpz_class squares = 0;
  mpz_class held = 0;
  for (const auto& [entity, h] : holdings.holdings) {
    if (h < 0 || h > holdings.supply) {
      throw ValidationError(fmt::format("entity {} holds {} outside [0, supply {}]", entity, h, holdings.supply));
    }
    if (h == 0) continue;
    const mpz_class v(static_cast<long>(h));
    squares += v * v;
    held += v;
  }
  if (held > holdings.supply) throw ValidationError("entity holdings exceed supply");
  const mpz_class c(static_cast<long>(holdings.supply));
  mpq_class index(10000 * squares, c * c);
  index.canonicalize();
  return to_double(index);
}

double d_hhi(const EntityHoldings& holdings) { return 1.0 - hhi(holdings) / 10000.0; }

std::vector<double> d_hhi_min_max(std::span<const double> hhi_values) {
  std::vector<double> out(hhi_values.size(), 1.0);
  if (hhi_values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(hhi_values.begin(), hhi_values.end());
  if (*hi == *lo) return out;
  for (std::size_t i = 0; i < hhi_values.size(); ++i) out[i] = 1.0 - (hhi_values[i] - *lo) / (*hi - *lo);
  return out;
}

std::optional<std::uint32_t> CommunityAssignment::community_of(std::string_view address) const {
  const auto it = std::lower_bound(addresses.begin(), addresses.end(), address);
  if (it == addresses.end() || *it != address) return std::nullopt;
  return community[static_cast<std::size_t>(it - addresses.begin())];
}

namespace {

struct LevelGraph {
  // Symmetric adjacency; self loops carry the weight internal to a node
  // counted in both directions.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency;
  std::vector<double> self_loop;
  std::vector<double> degree;
  double total = 0.0;  // 2m

  std::size_t size() const { return adjacency.size(); }
};

LevelGraph undirected_projection(const GraphSnapshot& g) {
  const std::size_t n = g.node_count();
  std::vector<std::map<std::uint32_t, double>> merged(n);
  for (const auto& e : g.edges()) {
    if (e.src == e.dst || e.weight <= 0.0) continue;
    merged[e.src][e.dst] += e.weight;
    merged[e.dst][e.src] += e.weight;
  }
  LevelGraph level;
  level.adjacency.resize(n);
  level.self_loop.assign(n, 0.0);
  level.degree.assign(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& [u, w] : merged[v]) {
      level.adjacency[v].emplace_back(u, w);
      level.degree[v] += w;
    }
    level.total += level.degree[v];
  }
  return level;
}

// One round of local moving. Returns the community of every node, numbered
// 0..k-1 by first appearance in node order.
std::vector<std::uint32_t> local_moving(const LevelGraph& level, Rng& rng, bool& moved_any) {
  const std::size_t n = level.size();
  std::vector<std::uint32_t> community(n);
  std::iota(community.begin(), community.end(), 0u);
  std::vector<double> tot(level.degree);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(std::span<std::uint32_t>(order));

  constexpr double kEps = 1e-12;
  const double m2 = level.total;
  std::map<std::uint32_t, double> links;
  moved_any = false;
  for (int pass = 0; pass < 1000; ++pass) {
    bool moved = false;
    for (const auto v : order) {
      const std::uint32_t current = community[v];
      const double k = level.degree[v];
      links.clear();
      links[current] = 0.0;
      for (const auto& [u, w] : level.adjacency[v]) {
        if (u != v) links[community[u]] += w;
      }
      tot[current] -= k;
      const double stay = links[current] - k * tot[current] / m2;
      std::uint32_t best = current;
      double best_gain = stay;
      // Ascending community ids, so among equal gains the smallest wins.
      for (const auto& [c, w] : links) {
        if (c == current) continue;
        const double gain = w - k * tot[c] / m2;
        if (gain > best_gain + kEps || (best != current && std::abs(gain - best_gain) <= kEps && c < best)) {
          if (gain > stay + kEps) {
            best = c;
            best_gain = gain;
          }
        }
      }
      tot[best] += k;
      community[v] = best;
      if (best != current) moved = true;
    }
    if (!moved) break;
    moved_any = true;
  }

  std::vector<std::uint32_t> renumber(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (auto& c : community) {
    if (renumber[c] == UINT32_MAX) renumber[c] = next++;
    c = renumber[c];
  }
  return community;
}

LevelGraph aggregate(const LevelGraph& level, const std::vector<std::uint32_t>& community, std::size_t count) {
  std::vector<std::map<std::uint32_t, double>> merged(count);
  LevelGraph next;
  next.adjacency.resize(count);
  next.self_loop.assign(count, 0.0);
  next.degree.assign(count, 0.0);
  for (std::size_t v = 0; v < level.size(); ++v) {
    const auto cv = community[v];
    next.self_loop[cv] += level.self_loop[v];
    next.degree[cv] += level.degree[v];
    for (const auto& [u, w] : level.adjacency[v]) {
      if (community[u] == cv) {
        next.self_loop[cv] += w;
      } else {
        merged[cv][community[u]] += w;
      }
    }
  }
  for (std::size_t c = 0; c < count; ++c) {
    for (const auto& [d, w] : merged[c]) next.adjacency[c].emplace_back(d, w);
  }
  next.total = level.total;
  return next;
}

}  // namespace

double modularity(const GraphSnapshot& g, std::span<const std::uint32_t> community) {
  const LevelGraph level = undirected_projection(g);
  if (level.total <= 0.0) return 0.0;
  std::unordered_map<std::uint32_t, double> internal;
  std::unordered_map<std::uint32_t, double> tot;
  for (std::size_t v = 0; v < level.size(); ++v) {
    tot[community[v]] += level.degree[v];
    for (const auto& [u, w] : level.adjacency[v]) {
      if (community[u] == community[v]) internal[community[v]] += w;
    }
  }
  double q = 0.0;
  for (const auto& [c, t] : tot) {
    const auto it = internal.find(c);
    const double in = it == internal.end() ? 0.0 : it->second;
    q += in / level.total - (t / level.total) * (t / level.total);
  }
  return q;
}

CommunityAssignment cluster_a2(const GraphSnapshot& g, std::uint64_t seed) {
  CommunityAssignment out;
  out.addresses = g.nodes();
  const std::size_t n = g.node_count();
  out.community.resize(n);
  std::iota(out.community.begin(), out.community.end(), 0u);
  if (n == 0) return out;

  LevelGraph level = undirected_projection(g);
  if (level.total > 0.0) {
    Rng rng(seed);
    std::vector<std::uint32_t> membership(n);
    std::iota(membership.begin(), membership.end(), 0u);
    while (true) {
      bool moved = false;
      const auto community = local_moving(level, rng, moved);
      if (!moved) break;
      const std::size_t count = *std::max_element(community.begin(), community.end()) + 1;
      for (auto& m : membership) m = community[m];
      if (count == level.size()) break;
      level = aggregate(level, community, count);
    }
    out.community = std::move(membership);
  }

  // Canonical numbering: by smallest member address (nodes are sorted).
  std::vector<std::uint32_t> renumber(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (auto& c : out.community) {
    if (renumber[c] == UINT32_MAX) renumber[c] = next++;
    c = renumber[c];
  }
  out.community_count = next;
  out.modularity = modularity(g, out.community);
  return out;
}

EntityHoldings holdings_per_address(const RankingList& ranking, Satoshi supply) {
  EntityHoldings h;
  h.date = ranking.date;
  h.mode = EntityMode::a1_per_address;
  h.supply = supply;
  for (const auto& e : ranking.entries) h.holdings.emplace_back(e.address, e.balance);
  return h;
}

EntityHoldings holdings_clustered(const RankingList& ranking, const CommunityAssignment& assignment, Satoshi supply) {
  std::map<std::string, Satoshi> entities;
  for (const auto& e : ranking.entries) {
    const auto c = assignment.community_of(e.address);
    entities[c ? fmt::format("community-{}", *c) : e.address] += e.balance;
  }
  EntityHoldings h;
  h.date = ranking.date;
  h.mode = EntityMode::a2_clustered;
  h.supply = supply;
  h.holdings.assign(entities.begin(), entities.end());
  return h;
}

std::vector<DatedEvent> default_events() {
  return {{parse_iso_day("2011-12-07"), "post-bubble price stabilisation"},
          {parse_iso_day("2014-03-16"), "Mt. Gox collapse"},
          {parse_iso_day("2018-12-05"), "mining difficulty drop"}};
}

AnnotatedSeries annotate_events(MetricSeries series, std::span<const DatedEvent> events) {
  AnnotatedSeries out;
  out.series = std::move(series);
  const auto& times = out.series.times;
  if (times.empty()) return out;
  const auto [first, last] = std::minmax_element(times.begin(), times.end());
  for (const auto& event : events) {
    const std::int64_t t = event.date.start_seconds();
    if (t < *first || t > *last) {
      log_info(fmt::format("event '{}' on {} lies outside the series, not annotated", event.label, to_iso(event.date)));
      continue;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const auto gap = std::llabs(times[i] - t);
      const auto best_gap = std::llabs(times[best] - t);
      if (gap < best_gap || (gap == best_gap && times[i] < times[best])) best = i;
    }
    out.annotations.push_back({best, event});
  }
  return out;
}

}  // namespace ledgerscope
