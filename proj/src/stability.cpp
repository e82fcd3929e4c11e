#include "ledgerscope/stability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

namespace ledgerscope {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1.
    const double shared = static_cast<double>(i + j + 2) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

namespace {

// 12 * S = n^3 - n - sum over tie groups of (t^3 - t).
double twelve_s(std::span<const double> ranks) {
  const auto n = static_cast<double>(ranks.size());
  double s = n * n * n - n;
  std::map<double, std::size_t> ties;
  for (const double r : ranks) ++ties[r];
  for (const auto& [r, count] : ties) {
    const auto t = static_cast<double>(count);
    s -= t * t * t - t;
  }
  return s;
}

}  // namespace

std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("Spearman needs paired samples of equal length");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double sx = twelve_s(rx);
  const double sy = twelve_s(ry);
  if (sx <= 0.0 || sy <= 0.0) return std::nullopt;
  double d2 = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double denominator = sx == sy ? 2.0 * sx : 2.0 * std::sqrt(sx * sy);
  const double rho = (sx + sy - 12.0 * d2) / denominator;
  return std::clamp(rho, -1.0, 1.0);
}

namespace {

SpearmanResult spearman_members(std::span<const RankedAddress> members, std::size_t a_size, const RankingList& b,
                                DropoutPolicy policy) {
  std::unordered_map<std::string_view, std::size_t> b_rank;
  b_rank.reserve(b.size());
  for (const auto& e : b.entries) b_rank.emplace(e.address, e.rank);

  std::vector<double> x;
  std::vector<double> y;
  SpearmanResult result;
  for (const auto& e : members) {
    const auto it = b_rank.find(e.address);
    if (it != b_rank.end()) {
      ++result.overlap;
      x.push_back(static_cast<double>(e.rank));
      y.push_back(static_cast<double>(it->second));
    } else if (policy == DropoutPolicy::impute) {
      x.push_back(static_cast<double>(e.rank));
      y.push_back(static_cast<double>(b.size() + 1));
    }
  }
  if (policy == DropoutPolicy::impute) {
    std::unordered_map<std::string_view, char> in_a;
    for (const auto& e : members) in_a.emplace(e.address, 1);
    for (const auto& e : b.entries) {
      if (!in_a.contains(e.address)) {
        x.push_back(static_cast<double>(a_size + 1));
        y.push_back(static_cast<double>(e.rank));
      }
    }
  }
  if (policy == DropoutPolicy::intersection && result.overlap < 2) return result;
  result.rho = spearman_rho(x, y);
  return result;
}

}  // namespace

SpearmanResult spearman(const RankingList& a, const RankingList& b, DropoutPolicy policy) {
  if (a.entries.empty() || b.entries.empty()) throw ValidationError("Spearman needs two non-empty rankings");
  return spearman_members(a.entries, a.size(), b, policy);
}

double retention_rate(const RankingList& a, const RankingList& b) {
  if (a.size() != b.size()) {
    throw ValidationError(fmt::format("retention needs equal list sizes, got {} and {}", a.size(), b.size()));
  }
  if (a.entries.empty()) throw ValidationError("retention of empty rankings");
  std::unordered_map<std::string_view, char> members;
  for (const auto& e : a.entries) members.emplace(e.address, 1);
  std::size_t kept = 0;
  for (const auto& e : b.entries) kept += members.contains(e.address) ? 1 : 0;
  return static_cast<double>(kept) / static_cast<double>(a.size());
}

std::string RankGroup::label() const { return fmt::format("{}-{}", first, last); }

std::vector<RankGroup> default_groups(std::size_t n, std::size_t width) {
  if (width == 0 || n == 0) throw ValidationError("rank groups need positive size and width");
  std::vector<RankGroup> groups;
  for (std::size_t first = 1; first <= n; first += width) groups.push_back({first, std::min(n, first + width - 1)});
  return groups;
}

std::vector<int> default_intervals() { return {1, 5, 10, 50, 100}; }

std::vector<StabilityPoint> stability_series(std::span<const RankingList> rankings, std::span<const int> intervals,
                                             std::span<const RankGroup> groups, DropoutPolicy policy) {
  std::map<Day, std::size_t> by_day;
  for (std::size_t i = 0; i < rankings.size(); ++i) by_day[rankings[i].date] = i;

  std::vector<StabilityPoint> points;
  std::size_t skipped = 0;
  for (const auto& from : rankings) {
    for (const int interval : intervals) {
      if (interval <= 0) throw ValidationError("stability intervals must be positive");
      const auto later = by_day.find(from.date + interval);
      if (later == by_day.end()) {
        ++skipped;
        continue;
      }
      const RankingList& to = rankings[later->second];
      for (const auto& group : groups) {
        if (group.first == 0 || group.last < group.first) throw ValidationError("invalid rank group");
        if (group.first > from.size()) continue;
        const auto begin = from.entries.begin() + static_cast<std::ptrdiff_t>(group.first - 1);
        const auto end = from.entries.begin() + static_cast<std::ptrdiff_t>(std::min(group.last, from.size()));
        const std::span<const RankedAddress> members(begin, end);
        StabilityPoint point;
        point.date = from.date;
        point.interval_days = interval;
        point.group = group;
        const auto s = spearman_members(members, from.size(), to, policy);
        point.spearman = s.rho;
        point.overlap = s.overlap;
        point.retention = static_cast<double>(s.overlap) / static_cast<double>(members.size());
        points.push_back(point);
      }
    }
  }
  if (skipped > 0) log_info(fmt::format("stability: {} (day, interval) pairs skipped for lack of a later ranking", skipped));
  return points;
}

void write_stability_csv(std::ostream& out, std::span<const StabilityPoint> points) {
  out << "date,interval,group,spearman,retention,overlap\n";
  for (const auto& p : points) {
    out << fmt::format("{},{},{},{},{},{}\n", to_iso(p.date), p.interval_days, p.group.label(),
                       p.spearman ? format_real(*p.spearman) : std::string(), format_real(p.retention), p.overlap);
  }
}

}  // namespace ledgerscope
