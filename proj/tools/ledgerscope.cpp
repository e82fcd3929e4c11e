#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ledgerscope/graphbuild.hpp"
#include "ledgerscope/pipeline.hpp"

namespace ls = ledgerscope;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

struct GlobalOptions {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string window;
  std::string input;
  std::string format;
  bool quiet = false;
};

ls::PipelineConfig resolve_config(const GlobalOptions& g) {
  ls::PipelineConfig c;
  if (!g.config.empty()) {
    c = ls::load_config(g.config);
  } else {
    c.synthetic = ls::SyntheticChainConfig{};
    c.set_seed(c.seed);
  }
  if (!g.input.empty()) {
    c.input_path = g.input;
    c.synthetic.reset();
  }
  if (!g.format.empty()) c.input_format = ls::parse_log_format(g.format);
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  if (g.seed) c.set_seed(*g.seed);
  if (g.threads) c.threads = *g.threads;
  if (!g.window.empty()) c.window = ls::parse_window_mode(g.window);
  c.validate();
  return c;
}

void print_report(const ls::RunReport& report) {
  for (const auto& s : report.stages) {
    std::cout << fmt::format("{:<14}{}\n", ls::to_string(s.stage), s.cached ? "cached" : "ran");
  }
  std::cout << fmt::format("{} outputs listed in manifest.csv\n", report.manifest.size());
}

// "lo:hi" inclusive block range.
std::pair<std::uint64_t, std::uint64_t> parse_block_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ls::ValidationError(fmt::format("block range '{}' must look like lo:hi", text));
  try {
    const auto lo = std::stoull(text.substr(0, colon));
    const auto hi = std::stoull(text.substr(colon + 1));
    if (hi < lo) throw ls::ValidationError(fmt::format("block range '{}' is reversed", text));
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ls::ValidationError(fmt::format("block range '{}' must look like lo:hi", text));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralization profiling for UTXO ledgers"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--seed", g.seed, "Seed for generation, pivot sampling and clustering");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--window", g.window, "per-block | per-day | cumulative");
  app.add_option("--input", g.input, "Transaction log (overrides the config input)");
  app.add_option("--format", g.format, "jsonl | csv");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  std::string stats_path;
  auto* stats = app.add_subcommand("stats", "Summarize a transaction log");
  stats->add_option("log", stats_path, "Transaction log")->required()->check(CLI::ExistingFile);

  ls::SyntheticChainConfig gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic transaction log");
  generate->add_option("-o,--output", gen_out, "Output file (stdout if omitted)");
  generate->add_option("--blocks", gen.blocks);
  generate->add_option("--tx-per-block", gen.tx_per_block);
  generate->add_option("--address-growth", gen.address_growth);
  generate->add_option("--concentration", gen.concentration);
  generate->add_option("--concentration-end", gen.concentration_end);
  generate->add_option("--whales", gen.whale_count);
  generate->add_option("--max-fee", gen.max_fee, "Largest fee in satoshis");
  generate->add_option("--block-interval", gen.block_interval, "Seconds between blocks");

  struct StageCommand {
    CLI::App* app;
    ls::Stage stage;
  };
  std::vector<StageCommand> stage_commands = {
      {app.add_subcommand("ingest", "Parse and validate the input log"), ls::Stage::ingest},
      {app.add_subcommand("balances", "Replay the ledger and write daily top-N rankings"), ls::Stage::ledger},
      {app.add_subcommand("centrality", "Centrality percentiles and dispersion"), ls::Stage::centrality},
      {app.add_subcommand("assetdist", "Top-x proportions and D_A"), ls::Stage::assetdist},
      {app.add_subcommand("stability", "Spearman and retention of rankings"), ls::Stage::stability},
      {app.add_subcommand("hhi", "HHI under per-address and clustered entities"), ls::Stage::concentration},
      {app.add_subcommand("features", "Assemble the daily feature table"), ls::Stage::features},
      {app.add_subcommand("forecast", "Train and score forecasting models"), ls::Stage::forecast},
      {app.add_subcommand("run", "Run the full pipeline"), ls::Stage::forecast},
  };

  auto* graph = app.add_subcommand("graph", "Build transaction graphs or export one window's edge list");
  std::string graph_blocks, graph_from, graph_to, graph_export;
  graph->add_option("--blocks", graph_blocks, "Inclusive block range lo:hi");
  graph->add_option("--from", graph_from, "First day (YYYY-MM-DD)");
  graph->add_option("--to", graph_to, "Last day, inclusive (YYYY-MM-DD)");
  graph->add_option("--export", graph_export, "Edge-list CSV (stdout if '-')");

  auto* plot = app.add_subcommand("plot", "Write the SVG figures of every analysis stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  ls::set_quiet(g.quiet);

  try {
    if (*stats) {
      const auto format = g.format.empty() ? (stats_path.ends_with(".csv") ? ls::LogFormat::csv : ls::LogFormat::jsonl)
                                           : ls::parse_log_format(g.format);
      ls::write_stats_csv(std::cout, ls::summarize(ls::read_transaction_file(stats_path, format)));
      return 0;
    }
    if (*generate) {
      if (g.seed) gen.seed = *g.seed;
      gen.validate();
      const auto log = ls::generate_synthetic_chain(gen);
      const auto format = g.format.empty() ? ls::LogFormat::jsonl : ls::parse_log_format(g.format);
      if (gen_out.empty()) {
        ls::write_transactions(std::cout, log, format);
      } else {
        std::ofstream out(gen_out, std::ios::binary);
        if (!out) throw ls::ValidationError(fmt::format("cannot write '{}'", gen_out));
        ls::write_transactions(out, log, format);
      }
      return 0;
    }

    const auto config = resolve_config(g);
    if (*graph) {
      const bool ranged = !graph_blocks.empty() || !graph_from.empty() || !graph_to.empty();
      if (!ranged) {
        if (!graph_export.empty()) throw ls::ValidationError("--export needs --blocks or --from/--to");
        print_report(ls::run_pipeline(config, ls::Stage::graph));
        return 0;
      }
      if (!graph_blocks.empty() && (!graph_from.empty() || !graph_to.empty())) {
        throw ls::ValidationError("use either --blocks or --from/--to");
      }
      std::optional<ls::Window> window;
      if (!graph_blocks.empty()) {
        const auto [lo, hi] = parse_block_range(graph_blocks);
        window = ls::Window::blocks(lo, hi);
      } else {
        if (graph_from.empty() || graph_to.empty()) throw ls::ValidationError("--from and --to go together");
        const auto from = ls::parse_iso_day(graph_from);
        const auto to = ls::parse_iso_day(graph_to);
        if (to < from) throw ls::ValidationError("--to is before --from");
        window = ls::Window::time(from.start_seconds(), to.end_seconds());
      }
      const auto log = config.synthetic ? ls::generate_synthetic_chain(*config.synthetic)
                                        : ls::read_transaction_file(*config.input_path, config.input_format);
      const auto snapshot = ls::build_snapshot(log, *window, config.graph);
      if (graph_export.empty() || graph_export == "-") {
        snapshot.write_edges_csv(std::cout);
      } else {
        std::ofstream out(graph_export, std::ios::binary);
        if (!out) throw ls::ValidationError(fmt::format("cannot write '{}'", graph_export));
        snapshot.write_edges_csv(out);
      }
      return 0;
    }
    if (*plot) {
      const ls::Stage targets[] = {ls::Stage::centrality, ls::Stage::assetdist, ls::Stage::stability,
                                   ls::Stage::concentration};
      const auto report = ls::run_pipeline(config, targets);
      for (const auto& e : report.manifest) {
        if (e.path.ends_with(".svg")) std::cout << (config.out_dir / e.path).string() << '\n';
      }
      return 0;
    }
    for (const auto& cmd : stage_commands) {
      if (*cmd.app) {
        print_report(ls::run_pipeline(config, cmd.stage));
        return 0;
      }
    }
  } catch (const ls::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  } catch (const ls::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
