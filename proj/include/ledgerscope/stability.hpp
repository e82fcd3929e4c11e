#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ledgerscope/ledger.hpp"

namespace ledgerscope {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Tie-corrected Spearman coefficient of paired samples:
//   rho = (Sx + Sy - sum d^2) / (2 sqrt(Sx Sy)),  S = (n^3 - n - sum(t^3 - t)) / 12
// where d are rank differences and t tie-group sizes. Empty when n < 2 or a
// side is constant.
std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y);

enum class DropoutPolicy {
  // Only addresses present in both lists take part.
  intersection,
  // Addresses missing from a list take rank size + 1 there (tied).
  impute,
};

struct SpearmanResult {
  std::optional<double> rho;
  std::size_t overlap = 0;
};

// Each address is ranked by its position in each list.
SpearmanResult spearman(const RankingList& a, const RankingList& b, DropoutPolicy policy = DropoutPolicy::intersection);

// |members(a) ∩ members(b)| / N. Throws ValidationError when sizes differ.
double retention_rate(const RankingList& a, const RankingList& b);

// Inclusive 1-based rank range.
struct RankGroup {
  std::size_t first = 1;
  std::size_t last = 1;

  std::string label() const;
  std::size_t size() const { return last - first + 1; }
};

// {1-500, 501-1000, ..., (N-width+1)-N}.
std::vector<RankGroup> default_groups(std::size_t n = 5000, std::size_t width = 500);
std::vector<int> default_intervals();

struct StabilityPoint {
  Day date;
  int interval_days = 0;
  RankGroup group;
  std::optional<double> spearman;
  double retention = 0.0;
  std::size_t overlap = 0;
};

// For each day i, interval n and group g: the addresses holding ranks in g on
// day i are followed to day i + n. Spearman compares their positions on both
// days over the overlap; retention is the fraction still ranked on day i + n.
// Pairs with a missing day i + n, or an empty group on day i, are skipped.
std::vector<StabilityPoint> stability_series(std::span<const RankingList> rankings, std::span<const int> intervals,
                                             std::span<const RankGroup> groups,
                                             DropoutPolicy policy = DropoutPolicy::intersection);

void write_stability_csv(std::ostream& out, std::span<const StabilityPoint> points);

}  // namespace ledgerscope
