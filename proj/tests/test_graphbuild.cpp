#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "ledgerscope/graphbuild.hpp"
#include "oracles.hpp"

using namespace ledgerscope;
using testing::make_tx;

namespace {

std::map<std::pair<std::string, std::string>, Rational> as_map(const std::vector<WeightedEdge>& edges) {
  std::map<std::pair<std::string, std::string>, Rational> m;
  for (const auto& e : edges) m[{e.src, e.dst}] += e.weight;
  return m;
}

}  // namespace

TEST_CASE("two inputs three outputs give six edges") {
  const auto tx = make_tx("t", 1, 0, {{"A", 10}, {"B", 20}}, {{"X", 5}, {"Y", 10}, {"Z", 15}});
  const auto edges = expand_edges(tx);
  CHECK(edges.size() == 6);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : edges) pairs.insert({e.src, e.dst});
  const std::set<std::pair<std::string, std::string>> expected{{"A", "X"}, {"A", "Y"}, {"A", "Z"},
                                                                {"B", "X"}, {"B", "Y"}, {"B", "Z"}};
  CHECK(pairs == expected);
}

TEST_CASE("single input single output carries the full input") {
  const auto edges = expand_edges(make_tx("t", 1, 0, {{"A", 100}}, {{"X", 90}}));
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].weight == 100);
}

TEST_CASE("bilinear split") {
  const auto m = as_map(expand_edges(make_tx("t", 1, 0, {{"A", 30}, {"B", 20}}, {{"X", 25}, {"Y", 25}})));
  CHECK(m.at({"A", "X"}) == 15);
  CHECK(m.at({"A", "Y"}) == 15);
  CHECK(m.at({"B", "X"}) == 10);
  CHECK(m.at({"B", "Y"}) == 10);
}

TEST_CASE("equal-input rule and self-edge flag") {
  EdgeOptions opts;
  opts.rule = WeightRule::equal_input;
  const auto m = as_map(expand_edges(make_tx("t", 1, 0, {{"A", 30}, {"B", 21}}, {{"X", 30}, {"A", 20}}), opts));
  CHECK(m.at({"A", "X"}) == 15);
  CHECK(m.at({"B", "A"}) == 10);
  CHECK(m.contains({"A", "A"}));
  opts.keep_self_edges = false;
  CHECK_FALSE(as_map(expand_edges(make_tx("t", 1, 0, {{"A", 30}}, {{"X", 10}, {"A", 20}}), opts)).contains({"A", "A"}));
}

TEST_CASE("duplicate addresses are merged and coinbase yields nothing") {
  const auto edges = expand_edges(make_tx("t", 1, 0, {{"A", 10}, {"A", 5}}, {{"X", 7}, {"X", 8}}));
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].weight == 15);
  CHECK(expand_edges(make_tx("cb", 0, 0, {}, {{"A", 50}})).empty());
}

TEST_CASE("expansion is invariant to endpoint order") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Transaction tx;
    tx.txid = "t";
    Satoshi total = 0;
    for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i) {
      const auto v = static_cast<Satoshi>(1 + rng.below(1000));
      tx.inputs.push_back({fmt::format("i{}", rng.below(4)), v});
      total += v;
    }
    for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i) {
      tx.outputs.push_back({fmt::format("o{}", rng.below(4)), 1 + static_cast<Satoshi>(rng.below(total / 6 + 1))});
    }
    auto shuffled = tx;
    rng.shuffle(std::span(shuffled.inputs));
    rng.shuffle(std::span(shuffled.outputs));
    CHECK(as_map(expand_edges(tx)) == as_map(expand_edges(shuffled)));
  }
}

TEST_CASE("snapshot aggregation and empty windows") {
  std::vector<Transaction> txs{
      make_tx("cb", 0, 0, {}, {{"A", 100}}),
      make_tx("t1", 1, 600, {{"A", 40}}, {{"X", 40}}),
      make_tx("t2", 2, 1200, {{"A", 60}}, {{"X", 60}}),
  };
  const TransactionLog log(std::move(txs));
  const auto g = build_snapshot(log, Window::blocks(1, 2));
  CHECK(g.node_count() == 2);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0].exact_weight == 100);
  CHECK(g.raw_edge_count() == 2);
  const auto empty = build_snapshot(log, Window::blocks(5, 9));
  CHECK(empty.node_count() == 0);
  CHECK(empty.edge_count() == 0);
}

TEST_CASE("three transaction toy log matches hand enumeration") {
  std::vector<Transaction> txs{
      make_tx("cb", 0, 0, {}, {{"A", 100}}),
      make_tx("t1", 1, 600, {{"A", 100}}, {{"B", 60}, {"C", 39}}),
      make_tx("t2", 2, 1200, {{"B", 60}, {"C", 39}}, {{"D", 50}, {"A", 48}}),
  };
  const auto g = build_snapshot(TransactionLog(std::move(txs)), Window::blocks(0, 2));
  // Nodes A B C D; edges A->B A->C B->D B->A C->D C->A.
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 6);
  CHECK(g.raw_edge_count() == 6);
  CHECK(g.total_weight() == 100 + 99);
}

TEST_CASE("edge count and weight conservation over synthetic windows") {
  SyntheticChainConfig cfg;
  cfg.blocks = 120;
  cfg.seed = 8;
  const auto log = generate_synthetic_chain(cfg);
  for (const auto mode : {WindowMode::per_block, WindowMode::per_day, WindowMode::cumulative}) {
    for (const auto& g : build_snapshots(log, mode)) {
      std::size_t raw = 0;
      Rational input = 0;
      std::map<std::pair<std::string, std::string>, Rational> expected;
      for (const auto& tx : log.transactions()) {
        if (!g.window().contains(tx) || tx.is_coinbase()) continue;
        std::set<std::string> ins, outs;
        for (const auto& e : tx.inputs) ins.insert(e.address), input += e.value;
        for (const auto& e : tx.outputs) outs.insert(e.address);
        raw += ins.size() * outs.size();
      }
      CHECK(g.raw_edge_count() == raw);
      CHECK(g.total_weight() == input);
    }
  }
}

TEST_CASE("edge csv lists exact weights") {
  std::vector<Transaction> txs{make_tx("cb", 0, 0, {}, {{"A", 10}}),
                               make_tx("t", 1, 1, {{"A", 10}}, {{"X", 1}, {"Y", 2}})};
  const auto g = build_snapshot(TransactionLog(std::move(txs)), Window::blocks(1, 1));
  std::ostringstream out;
  g.write_edges_csv(out);
  CHECK(out.str() == "src,dst,weight_sats\nA,X,10/3\nA,Y,20/3\n");
}

TEST_CASE("window mode names") {
  CHECK(parse_window_mode("per-block") == WindowMode::per_block);
  CHECK(parse_window_mode("per-day") == WindowMode::per_day);
  CHECK(parse_window_mode("cumulative") == WindowMode::cumulative);
  CHECK_THROWS_AS(parse_window_mode("weekly"), ValidationError);
}
