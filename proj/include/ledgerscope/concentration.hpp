#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ledgerscope/graphbuild.hpp"
#include "ledgerscope/ledger.hpp"
#include "ledgerscope/metric_series.hpp"

namespace ledgerscope {

enum class EntityMode { a1_per_address, a2_clustered };

std::string_view to_string(EntityMode mode);
EntityMode parse_entity_mode(std::string_view name);

struct EntityHoldings {
  Day date;
  EntityMode mode = EntityMode::a1_per_address;
  std::vector<std::pair<std::string, Satoshi>> holdings;
  // Minted supply at the date.
  Satoshi supply = 0;
};

// HHI = sum over entities of 10000 * (h / C)^2, in (0, 10000]. Evaluated as an
// exact fraction and rounded once. Throws ValidationError if C <= 0 or the
// holdings exceed C.
double hhi(const EntityHoldings& holdings);

// 1 - HHI / 10000.
double d_hhi(const EntityHoldings& holdings);

// 1 - (HHI - min) / (max - min) over the whole series; a constant series maps
// to 1. Depends on future values, so it is for figure replication only.
std::vector<double> d_hhi_min_max(std::span<const double> hhi_values);

struct CommunityAssignment {
  // Sorted; aligned with community.
  std::vector<std::string> addresses;
  std::vector<std::uint32_t> community;
  std::size_t community_count = 0;
  double modularity = 0.0;

  std::optional<std::uint32_t> community_of(std::string_view address) const;
};

// Multi-level greedy modularity maximisation (local moving plus aggregation)
// on the undirected projection, weights summed across directions and
// self-edges ignored. Nodes are visited in a seeded order, ties go to the
// smallest community id, and communities are numbered by their smallest
// address.
CommunityAssignment cluster_a2(const GraphSnapshot& g, std::uint64_t seed = 1);

// Modularity of a partition of g's undirected projection.
double modularity(const GraphSnapshot& g, std::span<const std::uint32_t> community);

EntityHoldings holdings_per_address(const RankingList& ranking, Satoshi supply);
// Addresses without an assignment are their own entity.
EntityHoldings holdings_clustered(const RankingList& ranking, const CommunityAssignment& assignment, Satoshi supply);

struct DatedEvent {
  Day date;
  std::string label;
};

// 2011-12-07, 2014-03-16, 2018-12-05.
std::vector<DatedEvent> default_events();

struct Annotation {
  std::size_t row = 0;
  DatedEvent event;
};

struct AnnotatedSeries {
  MetricSeries series;
  std::vector<Annotation> annotations;
};

// Each event inside the series' time range is attached to the nearest row
// (earlier row on ties); events outside the range are dropped and logged.
AnnotatedSeries annotate_events(MetricSeries series, std::span<const DatedEvent> events);

}  // namespace ledgerscope
