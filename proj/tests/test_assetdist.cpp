#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "ledgerscope/assetdist.hpp"
#include "oracles.hpp"

using namespace ledgerscope;
using testing::ranking_of;

TEST_CASE("proportion curve") {
  const auto whale = ranking_of({1000});
  const std::size_t xs[] = {1, 5, 10};
  for (const auto& p : proportion_curve(whale, 1000, xs).points) CHECK(p.proportion == 1.0);

  const auto uniform = ranking_of(std::vector<Satoshi>(10000, 7));
  const std::size_t x500[] = {500};
  CHECK(proportion_curve(uniform, 70000, x500).points[0].proportion == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("proportion curve matches a direct sum and is bounded") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Satoshi> b(1 + rng.below(400));
    for (auto& x : b) x = static_cast<Satoshi>(1 + rng.below(1'000'000) * rng.below(50));
    const Satoshi supply = std::accumulate(b.begin(), b.end(), Satoshi{0}) + static_cast<Satoshi>(rng.below(1000));
    const auto r = ranking_of(b);
    const std::vector<std::size_t> xs{10, 50, 100, 200, 500};
    const auto curve = proportion_curve(r, supply, xs);
    double last = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      Satoshi direct = 0;
      for (std::size_t i = 0; i < std::min(xs[k], r.entries.size()); ++i) direct += r.entries[i].balance;
      CHECK(curve.points[k].proportion == doctest::Approx(static_cast<double>(direct) / supply).epsilon(1e-14));
      CHECK(curve.points[k].proportion >= last);
      CHECK(curve.points[k].proportion <= 1.0);
      last = curve.points[k].proportion;
    }
  }
}

TEST_CASE("adjacent differences") {
  ProportionCurve c{Day{0}, {{1, 0.5}, {2, 0.6}, {3, 0.65}}};
  const auto d = adjacent_differences(c);
  REQUIRE(d.size() == 2);
  CHECK(d[0].delta == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(d[1].delta == doctest::Approx(0.05).epsilon(1e-12));
  ProportionCurve flat{Day{0}, {{1, 0.4}, {2, 0.4}, {3, 0.4}}};
  for (const auto& x : adjacent_differences(flat)) CHECK(x.delta == 0.0);
  ProportionCurve one{Day{0}, {{1, 0.4}}};
  CHECK_THROWS_AS(adjacent_differences(one), ValidationError);
}

TEST_CASE("decentralization degree closed forms") {
  CHECK(decentralization_degree_asset(ranking_of(std::vector<Satoshi>(37, 5))).d_a == 1.0);
  CHECK(decentralization_degree_asset(ranking_of({3, 2, 1})).d_a == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
  std::vector<Satoshi> monopoly(1000, 0);
  monopoly[0] = 1'000'000;
  // Trapezoid on the step curve: (2N - (2N - 1)) / N.
  CHECK(decentralization_degree_asset(ranking_of(monopoly)).d_a == doctest::Approx(1.0 / 1000).epsilon(1e-12));
  CHECK_THROWS_AS(decentralization_degree_asset(RankingList{}), ValidationError);
}

TEST_CASE("D_A equals one minus the pairwise Gini") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Satoshi> b(2 + rng.below(200));
    for (auto& x : b) x = static_cast<Satoshi>(1 + rng.below(100'000));
    const double expected = 1.0 - oracle::gini_pairwise(b).get_d();
    CHECK(std::abs(decentralization_degree_asset(ranking_of(b)).d_a - expected) <= 2.0 / b.size());
    CHECK(decentralization_degree_asset(ranking_of(b)).d_a == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("concentrating transfers lower D_A") {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Satoshi> b(3 + rng.below(60));
    for (auto& x : b) x = static_cast<Satoshi>(10 + rng.below(10'000));
    std::sort(b.rbegin(), b.rend());
    const auto rich = rng.below(b.size() - 1);
    const auto poor = rich + 1 + rng.below(b.size() - rich - 1);
    if (b[poor] == 0) continue;
    auto moved = b;
    const auto amount = static_cast<Satoshi>(1 + rng.below(static_cast<std::uint64_t>(b[poor])));
    moved[rich] += amount;
    moved[poor] -= amount;
    const double before = decentralization_degree_asset(ranking_of(b)).d_a;
    const double after = decentralization_degree_asset(ranking_of(moved)).d_a;
    CHECK(after < before);
  }
}

TEST_CASE("unnormalised and supply-basis variants") {
  const auto r = ranking_of({3, 2, 1});
  const auto pool = decentralization_degree_asset(r);
  // 1 - integral over [0, N] of (C_r - C_e), trapezoids through C_0 = 0.
  const double curve = (0.5 + (0.5 + 5.0 / 6.0) + (5.0 / 6.0 + 1.0)) / 2.0;
  CHECK(pool.d_a_unnormalized == doctest::Approx(1.0 - (curve - 1.5)).epsilon(1e-12));
  const auto global = decentralization_degree_asset(r, ShareBasis::supply, 12);
  CHECK(global.d_a != pool.d_a);
}

TEST_CASE("phase labels follow the default boundaries") {
  const auto b = PhaseBoundaries::defaults();
  CHECK(b.label_for(parse_iso_day("2009-01-08")) == "none");
  CHECK(b.label_for(parse_iso_day("2009-01-09")) == "phase1-increasing");
  CHECK(b.label_for(parse_iso_day("2010-02-09")) == "phase1-increasing");
  CHECK(b.label_for(parse_iso_day("2010-02-10")) == "phase2-decreasing");
  CHECK(b.label_for(parse_iso_day("2012-03-23")) == "phase2-decreasing");
  CHECK(b.label_for(parse_iso_day("2012-03-24")) == "phase3-stable");
  CHECK(b.label_for(parse_iso_day("2024-01-01")) == "phase3-stable");
}

TEST_CASE("phase criteria on constant and flattening histories") {
  const std::vector<std::size_t> xs{2, 4, 6};
  std::vector<ProportionCurve> constant;
  for (int d = 0; d < 5; ++d) {
    auto c = proportion_curve(ranking_of({9, 5, 4, 3, 2, 1, 1}), 30, xs);
    c.date = Day{d};
    constant.push_back(c);
  }
  const auto pc = phase_criteria(constant, PhaseBoundaries::defaults());
  for (const auto col : {"dC1", "dC2"}) {
    for (const double v : pc.series.column(col)) CHECK(v == 0.0);
  }

  // Wealth spreading out day by day: a fixed total redistributed ever more evenly.
  std::vector<ProportionCurve> flattening;
  for (int d = 0; d < 6; ++d) {
    std::vector<Satoshi> b(40);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 1000 + static_cast<Satoshi>((40 - i) * (40 - i) * (6 - d));
    auto c = proportion_curve(ranking_of(b), std::accumulate(b.begin(), b.end(), Satoshi{0}) + 50'000, xs);
    c.date = Day{d};
    flattening.push_back(c);
  }
  const auto pf = phase_criteria(flattening, PhaseBoundaries::defaults());
  const auto& c1 = pf.series.column("C1");
  const auto& c2 = pf.series.column("C2");
  for (std::size_t i = 1; i < c1.size(); ++i) {
    CHECK(c1[i] < c1[i - 1]);
    CHECK(c2[i] < c2[i - 1]);
  }
}

TEST_CASE("decaying generator concentration shrinks shares and deltas") {
  SyntheticChainConfig cfg;
  cfg.blocks = 1500;
  cfg.tx_per_block = 10;
  cfg.block_interval = 3600;
  cfg.concentration = 0.9;
  cfg.concentration_end = 0.0;
  cfg.whale_count = 5;
  cfg.seed = 2;
  const auto daily = replay_daily(generate_synthetic_chain(cfg), 100);
  const std::vector<std::size_t> xs{5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<double> top;
  std::vector<double> widest;
  for (std::size_t i = 0; i < daily.days.size(); ++i) {
    const auto curve = proportion_curve(daily.rankings[i], daily.supply[i], xs);
    top.push_back(curve.points[0].proportion);
    double w = 0;
    for (const auto& d : adjacent_differences(curve)) w = std::max(w, d.delta);
    widest.push_back(w);
  }
  auto mean = [](auto begin, auto end) { return std::accumulate(begin, end, 0.0) / static_cast<double>(end - begin); };
  const std::size_t q = top.size() / 4;
  MESSAGE("top share " << mean(top.begin() + q, top.begin() + 2 * q) << " -> " << mean(top.end() - q, top.end()));
  MESSAGE("widest delta " << mean(widest.begin() + q, widest.begin() + 2 * q) << " -> " << mean(widest.end() - q, widest.end()));
  CHECK(mean(top.end() - q, top.end()) < mean(top.begin() + q, top.begin() + 2 * q));
  CHECK(mean(widest.end() - q, widest.end()) < mean(widest.begin() + q, widest.begin() + 2 * q));
}
