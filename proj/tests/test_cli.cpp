#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(LEDGERSCOPE_CLI) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ledgerscope-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run("--help") == 0);
  CHECK(run("no-such-command") == 2);
  CHECK(run("run --window hourly --out-dir " + dir.string()) == 2);
  std::ofstream(dir / "bad.jsonl") << "{\"txid\": 5}\n";
  CHECK(run("run --input " + (dir / "bad.jsonl").string() + " --out-dir " + (dir / "out").string()) == 3);
  CHECK_FALSE(fs::exists(dir / "out/ledger"));
}

TEST_CASE("generate, stats and edge export") {
  const auto dir = scratch("tools");
  const auto log = (dir / "chain.csv").string();
  REQUIRE(run("generate --blocks 30 --format csv -o " + log) == 0);
  CHECK(run("stats " + log) == 0);
  const auto edges = (dir / "edges.csv").string();
  REQUIRE(run("graph --input " + log + " --format csv --blocks 5:9 --export " + edges) == 0);
  CHECK(slurp(edges).rfind("src,dst,weight_sats\n", 0) == 0);
  CHECK(run("graph --input " + log + " --format csv --blocks 9:5") == 2);
}

TEST_CASE("two runs with one config give identical manifests") {
  const auto dir = scratch("det");
  const std::string config = std::string(LEDGERSCOPE_SOURCE_DIR) + "/configs/synthetic.json";
  REQUIRE(run("--config " + config + " --out-dir " + (dir / "a").string() + " run") == 0);
  REQUIRE(run("--config " + config + " --out-dir " + (dir / "b").string() + " --threads 3 run") == 0);
  CHECK(slurp(dir / "a/manifest.csv") == slurp(dir / "b/manifest.csv"));
  REQUIRE(run("--config " + config + " --out-dir " + (dir / "b").string() + " plot") == 0);
  CHECK(run("--config " + config + " --out-dir " + (dir / "c").string() + " --seed 99 run") == 0);
  CHECK(slurp(dir / "a/manifest.csv") != slurp(dir / "c/manifest.csv"));
}
