#include "ledgerscope/assetdist.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace ledgerscope {

std::vector<std::size_t> default_top_x_grid() {
  std::vector<std::size_t> xs;
  for (std::size_t x = 500; x <= 5000; x += 500) xs.push_back(x);
  return xs;
}

ProportionCurve proportion_curve(const RankingList& ranking, Satoshi supply, std::span<const std::size_t> xs) {
  if (supply <= 0) throw ValidationError("proportion curve needs positive supply");
  if (!std::is_sorted(xs.begin(), xs.end())) throw ValidationError("top-x cutoffs must be ascending");
  ProportionCurve curve;
  curve.date = ranking.date;
  std::size_t taken = 0;
  Satoshi held = 0;
  for (const auto x : xs) {
    for (; taken < x && taken < ranking.size(); ++taken) held += ranking.entries[taken].balance;
    curve.points.push_back({x, static_cast<double>(held) / static_cast<double>(supply)});
  }
  return curve;
}

std::vector<AdjacentDelta> adjacent_differences(const ProportionCurve& curve) {
  if (curve.points.size() < 2) throw ValidationError("adjacent differences need at least two curve points");
  std::vector<AdjacentDelta> deltas;
  for (std::size_t k = 0; k + 1 < curve.points.size(); ++k) {
    deltas.push_back({curve.points[k].x, curve.points[k + 1].x, curve.points[k + 1].proportion - curve.points[k].proportion});
  }
  return deltas;
}

DecentralizationPoint decentralization_degree_asset(const RankingList& ranking, ShareBasis basis, Satoshi supply) {
  if (ranking.entries.empty()) throw ValidationError("decentralization degree of an empty ranking");
  const Satoshi pool = ranking.total();
  const Satoshi denominator = basis == ShareBasis::pool ? pool : supply;
  if (denominator <= 0) throw ValidationError("decentralization degree needs a positive total balance");

  // With S_k the cumulative top-k sum and T the denominator, the trapezoid
  // integral of C_r over u = k / N is sum_k (S_{k-1} + S_k) / (2 N T), and the
  // equality line integrates to 1/2. Hence
  //   D_A = 1 - 2 * (integral - 1/2) = (2 N T - sum_k (S_{k-1} + S_k)) / (N T),
  // evaluated in exact integers before the final division.
  const auto n = static_cast<__int128>(ranking.size());
  __int128 trapezoid = 0;
  __int128 prefix = 0;
  for (const auto& e : ranking.entries) {
    const __int128 before = prefix;
    prefix += e.balance;
    trapezoid += before + prefix;
  }
  const __int128 total = denominator;
  const __int128 numerator = 2 * n * total - trapezoid;
  DecentralizationPoint point;
  point.date = ranking.date;
  point.n = ranking.size();
  point.d_a = static_cast<double>(static_cast<long double>(numerator) / static_cast<long double>(n * total));
  // Raw rank axis: the area scales by N.
  const long double area = (static_cast<long double>(trapezoid) / (2.0L * static_cast<long double>(total)) -
                            static_cast<long double>(n) / 2.0L);
  point.d_a_unnormalized = static_cast<double>(1.0L - area);
  return point;
}

PhaseBoundaries PhaseBoundaries::defaults() {
  return PhaseBoundaries{{{parse_iso_day("2009-01-09"), "phase1-increasing"},
                          {parse_iso_day("2010-02-10"), "phase2-decreasing"},
                          {parse_iso_day("2012-03-24"), "phase3-stable"}}};
}

std::string PhaseBoundaries::label_for(Day day) const {
  std::string label = "none";
  for (const auto& [start, name] : starts) {
    if (day >= start) label = name;
  }
  return label;
}

PhaseCriteria phase_criteria(std::span<const ProportionCurve> curves, const PhaseBoundaries& boundaries) {
  if (curves.size() < 2) throw ValidationError("phase criteria need at least two dated curves");
  PhaseCriteria out;
  std::vector<double> c1;
  std::vector<double> c2;
  for (const auto& curve : curves) {
    if (curve.points.empty()) throw ValidationError(fmt::format("empty proportion curve on {}", to_iso(curve.date)));
    out.series.times.push_back(curve.date.start_seconds());
    c1.push_back(curve.points.back().proportion);
    double widest = 0.0;
    if (curve.points.size() >= 2) {
      for (const auto& d : adjacent_differences(curve)) widest = std::max(widest, d.delta);
    }
    c2.push_back(widest);
    out.phases.push_back(boundaries.label_for(curve.date));
  }
  auto first_difference = [](const std::vector<double>& v) {
    std::vector<double> d(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) d[i] = v[i] - v[i - 1];
    return d;
  };
  auto dc1 = first_difference(c1);
  auto dc2 = first_difference(c2);
  out.series.add_column("C1", std::move(c1));
  out.series.add_column("C2", std::move(c2));
  out.series.add_column("dC1", std::move(dc1));
  out.series.add_column("dC2", std::move(dc2));
  return out;
}

}  // namespace ledgerscope
