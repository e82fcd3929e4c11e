#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ledgerscope/hashing.hpp"
#include "ledgerscope/pipeline.hpp"

using namespace ledgerscope;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / fmt::format("ledgerscope-test-{}", name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kConfig = R"({
  "synthetic": {"blocks": 100, "tx_per_block": 10, "block_interval": 21600, "concentration": 0.3},
  "window": "per-day",
  "top_n": 100,
  "top_x": [10, 20, 30, 40, 50],
  "group_width": 25,
  "intervals": [1, 2],
  "events": [{"date": "2009-01-10", "label": "midpoint"}],
  "forecast": {"history": 2, "horizon": 1},
  "seed": 4
})";

PipelineConfig test_config(const fs::path& out, unsigned threads = 1) {
  auto c = parse_config(kConfig);
  c.out_dir = out;
  c.threads = threads;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("manifest lists every stage output with matching hashes") {
  const auto out = scratch("manifest");
  const auto report = run_pipeline(test_config(out));
  CHECK(report.stages.size() == 9);
  std::set<std::string> paths;
  for (const auto& e : read_manifest(out / "manifest.csv")) {
    paths.insert(e.path);
    CHECK(sha256_file(out / e.path) == e.sha256);
    CHECK(fs::file_size(out / e.path) == e.bytes);
  }
  const std::set<std::string> expected{
      "ingest/stats.csv",          "ingest/transactions.jsonl",      "ledger/top_n.csv",
      "ledger/supply.csv",         "ledger/fees.csv",                "graph/windows.csv",
      "centrality/percentiles.csv", "centrality/dispersion.csv",     "centrality/centrality.svg",
      "assetdist/proportions.csv", "assetdist/deltas.csv",           "assetdist/decentralization.csv",
      "assetdist/phases.csv",      "assetdist/asset_distribution.svg", "stability/stability.csv",
      "stability/stability.svg",   "concentration/hhi.csv",          "concentration/communities.csv",
      "concentration/events.csv",  "concentration/hhi.svg",          "features/features.csv",
      "forecast/report.csv"};
  CHECK(paths == expected);
  const auto events = slurp(out / "concentration/events.csv");
  CHECK(events.find("2009-01-10,midpoint,2009-01-10") != std::string::npos);
  const auto report_csv = slurp(out / "forecast/report.csv");
  for (const auto* label : {",Centrality,", ",Centrality+Asset,", ",Centrality+Rank,", ",Centrality+Asset+Rank,"}) {
    CHECK(report_csv.find(label) != std::string::npos);
  }
}

TEST_CASE("rerun is fully cached and invalidation is scoped") {
  const auto out = scratch("cache");
  auto config = test_config(out);
  run_pipeline(config);
  const auto before = slurp(out / "manifest.csv");
  const auto again = run_pipeline(config);
  for (const auto& s : again.stages) CHECK(s.cached);
  CHECK(slurp(out / "manifest.csv") == before);

  config.hhi_min_max = true;
  const auto changed = run_pipeline(config);
  for (const auto& s : changed.stages) {
    const bool downstream = s.stage == Stage::concentration || s.stage == Stage::features || s.stage == Stage::forecast;
    CHECK_MESSAGE(s.cached != downstream, to_string(s.stage));
  }

  fs::remove(out / "stability/stability.csv");
  const auto repaired = run_pipeline(config, Stage::stability);
  for (const auto& s : repaired.stages) CHECK(s.cached == (s.stage != Stage::stability));
  CHECK(fs::exists(out / "stability/stability.csv"));
}

TEST_CASE("identical configs give byte-identical outputs") {
  const auto a = scratch("det-a");
  const auto b = scratch("det-b");
  run_pipeline(test_config(a, 1));
  run_pipeline(test_config(b, 4));
  CHECK(slurp(a / "manifest.csv") == slurp(b / "manifest.csv"));
}

TEST_CASE("corrupt input aborts in ingest and leaves no ledger outputs") {
  const auto dir = scratch("corrupt");
  {
    std::ofstream log(dir / "bad.jsonl");
    log << R"({"txid":"cb","height":0,"time":0,"inputs":[],"outputs":[{"addr":"A","value":50}]})" << '\n';
    log << R"({"txid":"t","height":1,"time":600,"inputs":[{"addr":"A","value":90}],"outputs":[{"addr":"B","value":10}]})" << '\n';
    log << "{not json\n";
  }
  auto config = parse_config(R"({"input": {"path": "bad.jsonl"}})", dir);
  config.out_dir = dir / "out";
  try {
    run_pipeline(config);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == Stage::ingest);
    CHECK(std::string(e.what()).find("ingest") != std::string::npos);
  }
  CHECK(fs::exists(dir / "out/ingest/.partial"));
  CHECK_FALSE(fs::exists(dir / "out/ledger/top_n.csv"));
}

TEST_CASE("overspending input fails in the ledger stage") {
  const auto dir = scratch("overspend");
  {
    std::ofstream log(dir / "log.jsonl");
    log << R"({"txid":"cb","height":0,"time":0,"inputs":[],"outputs":[{"addr":"A","value":50}]})" << '\n';
    log << R"({"txid":"t","height":1,"time":600,"inputs":[{"addr":"B","value":10}],"outputs":[{"addr":"C","value":10}]})" << '\n';
  }
  auto config = parse_config(R"({"input": {"path": "log.jsonl"}})", dir);
  config.out_dir = dir / "out";
  try {
    run_pipeline(config, Stage::ledger);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == Stage::ledger);
  }
  CHECK(fs::exists(dir / "out/ledger/.partial"));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config("{"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"window": "hourly", "synthetic": {}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"top_n": 0, "synthetic": {}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"synthetic": {}, "forecast": {"models": ["oracle"]}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"synthetic": {}, "hhi": {"normalization": "log"}})"), ValidationError);
  const auto c = parse_config(R"({"synthetic": {"seed": 3}})");
  CHECK(c.synthetic->seed == 3);
  const auto s = parse_config(R"({"synthetic": {"seed": 3}, "seed": 8})");
  CHECK(s.synthetic->seed == 8);
  CHECK(s.betweenness.seed == 8);
}
