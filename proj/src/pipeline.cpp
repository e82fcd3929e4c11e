#include "ledgerscope/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "ledgerscope/hashing.hpp"
#include "ledgerscope/ledger.hpp"
#include "ledgerscope/svg.hpp"

namespace ledgerscope {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kCacheVersion = "ledgerscope-cache-1";
constexpr std::array kStages = {Stage::ingest,     Stage::ledger,        Stage::graph,
                                Stage::centrality, Stage::assetdist,     Stage::stability,
                                Stage::concentration, Stage::features, Stage::forecast};

std::vector<Stage> dependencies(Stage stage) {
  switch (stage) {
    case Stage::ingest: return {};
    case Stage::ledger: return {Stage::ingest};
    case Stage::graph: return {Stage::ingest};
    case Stage::centrality: return {Stage::graph};
    case Stage::assetdist: return {Stage::ledger};
    case Stage::stability: return {Stage::ledger};
    case Stage::concentration: return {Stage::ingest, Stage::ledger};
    case Stage::features: return {Stage::ledger, Stage::centrality, Stage::assetdist, Stage::stability, Stage::concentration};
    case Stage::forecast: return {Stage::features};
  }
  return {};
}

void collect(Stage stage, std::set<Stage>& needed) {
  if (!needed.insert(stage).second) return;
  for (const auto dep : dependencies(stage)) collect(dep, needed);
}

std::size_t metric_index(Metric m) { return static_cast<std::size_t>(m); }

struct WindowSummary {
  std::int64_t time = 0;
  bool empty = true;
  std::vector<double> percentiles;
  DispersionPoint dispersion;
  double mean = 0.0;
};

struct CentralityResult {
  std::array<std::vector<WindowSummary>, 4> by_metric;
  std::size_t pagerank_unconverged = 0;
};

struct AssetResult {
  std::vector<ProportionCurve> curves;
  std::vector<std::vector<AdjacentDelta>> deltas;
  std::vector<DecentralizationPoint> degrees;
  std::optional<PhaseCriteria> phases;
};

struct ConcentrationResult {
  CommunityAssignment assignment;
  std::vector<Day> days;
  // Indexed like config.hhi_modes.
  std::vector<std::vector<double>> hhi;
  std::vector<std::vector<double>> d_hhi;
  std::vector<Annotation> annotations;
};

struct ForecastOutcome {
  std::vector<ForecastResult> results;
  std::vector<std::string> labels;
};

std::string fingerprint(const Json& j) { return sha256_hex(j.dump()); }

class Pipeline {
 public:
  explicit Pipeline(const PipelineConfig& config) : config_(config), out_(config.out_dir) {}

  RunReport run(std::span<const Stage> targets) {
    std::set<Stage> needed;
    for (const auto stage : targets) collect(stage, needed);
    fs::create_directories(out_ / ".cache");

    std::map<Stage, bool> cached;
    for (const auto stage : kStages) {
      if (!needed.contains(stage)) continue;
      keys_[stage] = compute_key(stage);
      cached[stage] = is_cached(stage);
    }

    RunReport report;
    auto run_one = [&](Stage stage) {
      StageReport r;
      r.stage = stage;
      r.cached = cached[stage];
      if (r.cached) {
        log_info(fmt::format("stage {}: cached", to_string(stage)));
      } else {
        execute(stage);
        log_info(fmt::format("stage {}: done", to_string(stage)));
      }
      for (const auto& [path, hash] : recorded_outputs(stage)) r.outputs.push_back(path);
      return r;
    };

    for (const auto stage : {Stage::ingest, Stage::ledger, Stage::graph}) {
      if (needed.contains(stage)) report.stages.push_back(run_one(stage));
    }

    const std::array analysis = {Stage::centrality, Stage::assetdist, Stage::stability, Stage::concentration};
    std::vector<Stage> pending;
    for (const auto stage : analysis) {
      if (needed.contains(stage)) pending.push_back(stage);
    }
    if (config_.threads > 1 && pending.size() > 1) {
      // Shared inputs are materialised first; each analysis stage then only
      // reads them and owns its own output directory.
      bool any_runs = false;
      for (const auto stage : pending) any_runs |= !cached[stage];
      if (any_runs) {
        for (const auto stage : pending) {
          if (cached[stage]) continue;
          if (stage == Stage::centrality) ensure_graphs();
          if (stage != Stage::centrality) ensure_daily();
          if (stage == Stage::concentration) ensure_log();
        }
      }
      std::vector<std::future<StageReport>> futures;
      for (const auto stage : pending) futures.push_back(std::async(std::launch::async, run_one, stage));
      std::exception_ptr failure;
      for (auto& f : futures) {
        try {
          report.stages.push_back(f.get());
        } catch (...) {
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
    } else {
      for (const auto stage : pending) report.stages.push_back(run_one(stage));
    }

    for (const auto stage : {Stage::features, Stage::forecast}) {
      if (needed.contains(stage)) report.stages.push_back(run_one(stage));
    }

    for (const auto& s : report.stages) {
      for (const auto& [path, hash] : recorded_outputs(s.stage)) {
        report.manifest.push_back({path, hash, fs::file_size(out_ / path)});
      }
    }
    std::sort(report.manifest.begin(), report.manifest.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    std::ofstream manifest(out_ / "manifest.csv", std::ios::binary);
    manifest << "path,sha256,bytes\n";
    for (const auto& e : report.manifest) manifest << fmt::format("{},{},{}\n", e.path, e.sha256, e.bytes);
    return report;
  }

 private:
  // ---- cache bookkeeping -------------------------------------------------

  Json section(Stage stage) const {
    Json j;
    const auto& c = config_;
    switch (stage) {
      case Stage::ingest:
        if (c.synthetic) {
          const auto& s = *c.synthetic;
          j["synthetic"] = {{"blocks", s.blocks}, {"tx_per_block", s.tx_per_block}, {"address_growth", s.address_growth},
                            {"subsidy", s.subsidy}, {"concentration", s.concentration},
                            {"concentration_end", s.concentration_end ? Json(*s.concentration_end) : Json()},
                            {"whale_count", s.whale_count}, {"max_fee", s.max_fee}, {"genesis_time", s.genesis_time},
                            {"block_interval", s.block_interval}, {"seed", s.seed}};
        } else {
          j["input_sha256"] = sha256_file(*c.input_path);
          j["format"] = c.input_format == LogFormat::jsonl ? "jsonl" : "csv";
        }
        break;
      case Stage::ledger: j["top_n"] = c.top_n; break;
      case Stage::graph:
        j["window"] = to_string(c.window);
        j["rule"] = c.graph.edges.rule == WeightRule::bilinear ? "bilinear" : "equal_input";
        j["self_edges"] = c.graph.edges.keep_self_edges;
        j["exact"] = c.graph.exact_weights;
        break;
      case Stage::centrality:
        j["percentiles"] = c.percentiles;
        j["pagerank"] = {c.pagerank.damping, c.pagerank.tolerance, c.pagerank.max_iterations};
        j["betweenness"] = {c.betweenness.exact_threshold, c.betweenness.pivots, c.betweenness.seed};
        break;
      case Stage::assetdist: {
        j["top_x"] = c.top_x;
        Json phases = Json::array();
        for (const auto& [day, label] : c.phases.starts) phases.push_back({to_iso(day), label});
        j["phases"] = phases;
        break;
      }
      case Stage::stability:
        j["intervals"] = c.intervals;
        j["group_width"] = c.group_width;
        break;
      case Stage::concentration: {
        Json modes = Json::array();
        for (const auto m : c.hhi_modes) modes.push_back(to_string(m));
        j["modes"] = modes;
        j["min_max"] = c.hhi_min_max;
        Json events = Json::array();
        for (const auto& e : c.events) events.push_back({to_iso(e.date), e.label});
        j["events"] = events;
        j["seed"] = c.seed;
        j["rule"] = c.graph.edges.rule == WeightRule::bilinear ? "bilinear" : "equal_input";
        break;
      }
      case Stage::features:
        j["sets"] = feature_sets_label(c.feature_sets);
        j["target"] = c.target_csv ? sha256_file(*c.target_csv) : "fee";
        j["target_name"] = c.target_name;
        j["rank_interval"] = c.rank_feature_interval;
        break;
      case Stage::forecast: {
        Json models = Json::array();
        for (const auto m : c.models) models.push_back(to_string(m));
        j["models"] = models;
        j["history"] = c.history;
        j["horizon"] = c.horizon;
        j["ablation"] = c.ablation;
        j["sets"] = feature_sets_label(c.feature_sets);
        break;
      }
    }
    return j;
  }

  std::string compute_key(Stage stage) const {
    Json j;
    j["version"] = kCacheVersion;
    j["stage"] = to_string(stage);
    j["section"] = section(stage);
    Json deps = Json::array();
    for (const auto dep : dependencies(stage)) deps.push_back(keys_.at(dep));
    j["deps"] = deps;
    return fingerprint(j);
  }

  fs::path cache_file(Stage stage) const { return out_ / ".cache" / fmt::format("{}.json", to_string(stage)); }

  bool is_cached(Stage stage) const {
    std::ifstream in(cache_file(stage));
    if (!in) return false;
    Json record;
    try {
      record = Json::parse(in);
    } catch (const Json::exception&) {
      return false;
    }
    if (record.value("key", std::string()) != keys_.at(stage)) return false;
    if (fs::exists(out_ / std::string(to_string(stage)) / ".partial")) return false;
    for (const auto& [path, hash] : record.at("outputs").items()) {
      const auto file = out_ / path;
      if (!fs::exists(file) || sha256_file(file) != hash.get<std::string>()) return false;
    }
    return true;
  }

  std::vector<std::pair<std::string, std::string>> recorded_outputs(Stage stage) const {
    std::ifstream in(cache_file(stage));
    std::vector<std::pair<std::string, std::string>> outputs;
    if (!in) return outputs;
    const Json record = Json::parse(in);
    for (const auto& [path, hash] : record.at("outputs").items()) outputs.emplace_back(path, hash.get<std::string>());
    return outputs;
  }

  void write_output(Stage stage, const std::string& name, const std::string& content) {
    const std::string rel = fmt::format("{}/{}", to_string(stage), name);
    const auto path = out_ / rel;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(fmt::format("failed writing {}", path.string()));
    std::lock_guard lock(outputs_mutex_);
    written_[stage][rel] = sha256_hex(content);
  }

  void execute(Stage stage) {
    const auto dir = out_ / std::string(to_string(stage));
    fs::create_directories(dir);
    fs::remove(dir / ".partial");
    fs::remove(cache_file(stage));
    try {
      switch (stage) {
        case Stage::ingest: write_ingest(); break;
        case Stage::ledger: write_ledger(); break;
        case Stage::graph: write_graph(); break;
        case Stage::centrality: write_centrality(); break;
        case Stage::assetdist: write_assetdist(); break;
        case Stage::stability: write_stability(); break;
        case Stage::concentration: write_concentration(); break;
        case Stage::features: write_features(); break;
        case Stage::forecast: write_forecast(); break;
      }
    } catch (const StageError& e) {
      std::ofstream(dir / ".partial") << e.what() << '\n';
      throw;
    } catch (const std::exception& e) {
      std::ofstream(dir / ".partial") << e.what() << '\n';
      throw StageError(stage, e.what());
    }
    Json record;
    record["key"] = keys_.at(stage);
    Json outputs = Json::object();
    {
      std::lock_guard lock(outputs_mutex_);
      for (const auto& [path, hash] : written_[stage]) outputs[path] = hash;
    }
    record["outputs"] = outputs;
    std::ofstream(cache_file(stage)) << record.dump(2) << '\n';
  }

  template <typename F>
  void guarded(Stage stage, F&& f) {
    try {
      f();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

  std::string date_label(std::int64_t time) const {
    return config_.window == WindowMode::per_block ? to_iso_timestamp(time) : to_iso(day_of(time));
  }

  // ---- in-memory stage results ------------------------------------------

  const TransactionLog& ensure_log() {
    if (!log_) {
      guarded(Stage::ingest, [&] {
        log_ = config_.synthetic ? generate_synthetic_chain(*config_.synthetic)
                                 : read_transaction_file(*config_.input_path, config_.input_format);
      });
    }
    return *log_;
  }

  const DailyLedger& ensure_daily() {
    if (!daily_) {
      const auto& log = ensure_log();
      guarded(Stage::ledger, [&] { daily_ = replay_daily(log, config_.top_n); });
    }
    return *daily_;
  }

  const std::vector<GraphSnapshot>& ensure_graphs() {
    if (!graphs_) {
      const auto& log = ensure_log();
      guarded(Stage::graph, [&] { graphs_ = build_snapshots(log, config_.window, config_.graph); });
    }
    return *graphs_;
  }

  const CentralityResult& ensure_centrality() {
    if (centrality_) return *centrality_;
    const auto& graphs = ensure_graphs();
    guarded(Stage::centrality, [&] {
      CentralityResult result;
      for (auto& v : result.by_metric) v.resize(graphs.size());
      std::atomic<std::size_t> next{0};
      std::atomic<std::size_t> unconverged{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < graphs.size(); i = next++) {
          const auto& g = graphs[i];
          const std::array<CentralityMap, 4> maps = {betweenness(g, config_.betweenness), closeness(g), in_degree(g),
                                                     page_rank(g, config_.pagerank)};
          if (!maps[3].converged) ++unconverged;
          for (const auto& map : maps) {
            auto& summary = result.by_metric[metric_index(map.metric)][i];
            summary.time = g.window().anchor_time;
            if (map.empty()) continue;
            summary.empty = false;
            std::vector<double> sorted = map.values;
            std::sort(sorted.begin(), sorted.end());
            for (const double p : config_.percentiles) summary.percentiles.push_back(percentile(sorted, p));
            summary.dispersion = dispersion_rate(map, summary.time);
            summary.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
          }
        }
      };
      const unsigned threads = std::max(1u, std::min<unsigned>(config_.threads, static_cast<unsigned>(graphs.size())));
      std::vector<std::thread> pool;
      for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      result.pagerank_unconverged = unconverged;
      if (unconverged > 0) log_warn(fmt::format("PageRank hit max_iterations on {} windows", result.pagerank_unconverged));
      centrality_ = std::move(result);
    });
    return *centrality_;
  }

  const AssetResult& ensure_asset() {
    if (asset_) return *asset_;
    const auto& daily = ensure_daily();
    guarded(Stage::assetdist, [&] {
      AssetResult result;
      for (std::size_t i = 0; i < daily.days.size(); ++i) {
        const auto& ranking = daily.rankings[i];
        if (ranking.entries.empty() || daily.supply[i] <= 0) continue;
        result.curves.push_back(proportion_curve(ranking, daily.supply[i], config_.top_x));
        result.deltas.push_back(adjacent_differences(result.curves.back()));
        result.degrees.push_back(decentralization_degree_asset(ranking));
      }
      if (result.curves.size() >= 2) result.phases = phase_criteria(result.curves, config_.phases);
      asset_ = std::move(result);
    });
    return *asset_;
  }

  std::vector<RankGroup> stability_groups() const {
    std::vector<RankGroup> groups{{1, config_.top_n}};
    if (config_.group_width < config_.top_n) {
      for (const auto& g : default_groups(config_.top_n, config_.group_width)) groups.push_back(g);
    }
    return groups;
  }

  const std::vector<StabilityPoint>& ensure_stability() {
    if (stability_) return *stability_;
    const auto& daily = ensure_daily();
    guarded(Stage::stability, [&] {
      const auto groups = stability_groups();
      stability_ = stability_series(daily.rankings, config_.intervals, groups);
    });
    return *stability_;
  }

  const ConcentrationResult& ensure_concentration() {
    if (concentration_) return *concentration_;
    const auto& daily = ensure_daily();
    const auto& log = ensure_log();
    guarded(Stage::concentration, [&] {
      ConcentrationResult result;
      GraphOptions options;
      options.edges = config_.graph.edges;
      options.exact_weights = false;
      std::unordered_set<std::string> ever_top;
      for (const auto& ranking : daily.rankings) {
        for (const auto& e : ranking.entries) ever_top.insert(e.address);
      }
      options.node_filter = std::move(ever_top);
      GraphBuilder builder(std::move(options));
      for (const auto& tx : log.transactions()) builder.add(tx);
      const auto last = log.empty() ? 0 : log[log.size() - 1].block_height;
      const auto subgraph = builder.snapshot(Window::blocks(0, last));
      const bool need_a2 = std::find(config_.hhi_modes.begin(), config_.hhi_modes.end(), EntityMode::a2_clustered) !=
                           config_.hhi_modes.end();
      if (need_a2) result.assignment = cluster_a2(subgraph, config_.seed);

      result.hhi.resize(config_.hhi_modes.size());
      result.d_hhi.resize(config_.hhi_modes.size());
      for (std::size_t i = 0; i < daily.days.size(); ++i) {
        if (daily.rankings[i].entries.empty() || daily.supply[i] <= 0) continue;
        result.days.push_back(daily.days[i]);
        for (std::size_t k = 0; k < config_.hhi_modes.size(); ++k) {
          const auto holdings = config_.hhi_modes[k] == EntityMode::a1_per_address
                                    ? holdings_per_address(daily.rankings[i], daily.supply[i])
                                    : holdings_clustered(daily.rankings[i], result.assignment, daily.supply[i]);
          const double index = hhi(holdings);
          result.hhi[k].push_back(index);
          result.d_hhi[k].push_back(1.0 - index / 10000.0);
        }
      }
      if (config_.hhi_min_max) {
        for (std::size_t k = 0; k < config_.hhi_modes.size(); ++k) result.d_hhi[k] = d_hhi_min_max(result.hhi[k]);
      }
      MetricSeries series;
      for (const auto d : result.days) series.times.push_back(d.start_seconds());
      for (std::size_t k = 0; k < config_.hhi_modes.size(); ++k) {
        series.add_column(fmt::format("d_hhi_{}", to_string(config_.hhi_modes[k])), result.d_hhi[k]);
      }
      result.annotations = annotate_events(std::move(series), config_.events).annotations;
      concentration_ = std::move(result);
    });
    return *concentration_;
  }

  std::vector<DailySeries> feature_sources() {
    std::vector<DailySeries> sources;
    const auto& centrality = ensure_centrality();
    for (const auto metric : kAllMetrics) {
      std::vector<TimedValue> means;
      std::vector<TimedValue> dispersions;
      for (const auto& w : centrality.by_metric[metric_index(metric)]) {
        if (w.empty) continue;
        means.push_back({w.time, w.mean});
        dispersions.push_back({w.time, w.dispersion.dispersion});
      }
      for (auto& c : daily_stat_columns(FeatureSet::centrality, std::string(to_string(metric)), means)) sources.push_back(std::move(c));
      for (auto& c : daily_stat_columns(FeatureSet::centrality, fmt::format("{}_dispersion", to_string(metric)), dispersions)) {
        sources.push_back(std::move(c));
      }
    }

    const auto& asset = ensure_asset();
    DailySeries c1{"asset:c1:value", FeatureSet::asset, {}};
    std::vector<DailySeries> deltas;
    for (std::size_t k = 0; k + 1 < config_.top_x.size(); ++k) {
      deltas.push_back({fmt::format("asset:delta_{}_{}:value", config_.top_x[k], config_.top_x[k + 1]), FeatureSet::asset, {}});
    }
    DailySeries da{"asset:d_a:value", FeatureSet::asset, {}};
    for (std::size_t i = 0; i < asset.curves.size(); ++i) {
      const Day day = asset.curves[i].date;
      c1.values[day] = asset.curves[i].points.back().proportion;
      for (std::size_t k = 0; k < deltas.size(); ++k) deltas[k].values[day] = asset.deltas[i][k].delta;
      da.values[day] = asset.degrees[i].d_a;
    }
    sources.push_back(std::move(c1));
    for (auto& d : deltas) sources.push_back(std::move(d));
    sources.push_back(std::move(da));
    const auto& conc = ensure_concentration();
    for (std::size_t k = 0; k < config_.hhi_modes.size(); ++k) {
      DailySeries s{fmt::format("asset:d_hhi_{}:value", to_string(config_.hhi_modes[k]) == "A1" ? "a1" : "a2"), FeatureSet::asset, {}};
      for (std::size_t i = 0; i < conc.days.size(); ++i) s.values[conc.days[i]] = conc.d_hhi[k][i];
      sources.push_back(std::move(s));
    }

    // Rank features are dated by the later day of each comparison so a row
    // never depends on data after its own date.
    const int n = config_.rank_feature_interval;
    const auto& daily = ensure_daily();
    const RankGroup top{1, config_.top_n};
    const int intervals[] = {n};
    const RankGroup groups[] = {top};
    DailySeries rho{fmt::format("rank:spearman_{}d:top", n), FeatureSet::rank, {}};
    DailySeries kept{fmt::format("rank:retention_{}d:top", n), FeatureSet::rank, {}};
    for (const auto& p : stability_series(daily.rankings, intervals, groups)) {
      if (p.spearman) rho.values[p.date + n] = *p.spearman;
      kept.values[p.date + n] = p.retention;
    }
    sources.push_back(std::move(rho));
    sources.push_back(std::move(kept));
    return sources;
  }

  TargetSeries target_series() {
    if (config_.target_csv) {
      std::ifstream in(*config_.target_csv);
      if (!in) throw Error(fmt::format("cannot read target series '{}'", *config_.target_csv));
      return read_target_csv(in, fmt::format("target:{}", config_.target_name));
    }
    const auto& daily = ensure_daily();
    TargetSeries t{fmt::format("target:{}", config_.target_name), {}};
    for (std::size_t i = 0; i < daily.days.size(); ++i) t.values[daily.days[i]] = static_cast<double>(daily.fees[i]);
    return t;
  }

  void ensure_features() {
    if (features_) return;
    auto sources = feature_sources();
    guarded(Stage::features, [&] {
      target_ = target_series();
      sources_ = std::move(sources);
      features_ = assemble_features(sources_, config_.feature_sets, *target_);
    });
  }

  // ---- stage writers -----------------------------------------------------

  void write_ingest() {
    const auto& log = ensure_log();
    std::ostringstream stats;
    write_stats_csv(stats, summarize(log));
    write_output(Stage::ingest, "stats.csv", stats.str());
    if (config_.synthetic) {
      std::ostringstream txs;
      write_transactions(txs, log, LogFormat::jsonl);
      write_output(Stage::ingest, "transactions.jsonl", txs.str());
    }
  }

  void write_ledger() {
    const auto& daily = ensure_daily();
    std::ostringstream top;
    write_rankings_csv(top, daily.rankings);
    write_output(Stage::ledger, "top_n.csv", top.str());
    std::ostringstream supply;
    write_supply_csv(supply, daily);
    write_output(Stage::ledger, "supply.csv", supply.str());
    std::ostringstream fees;
    fees << "date,fee_sats\n";
    for (std::size_t i = 0; i < daily.days.size(); ++i) fees << fmt::format("{},{}\n", to_iso(daily.days[i]), daily.fees[i]);
    write_output(Stage::ledger, "fees.csv", fees.str());
  }

  void write_graph() {
    const auto& graphs = ensure_graphs();
    std::ostringstream out;
    out << "window,date,nodes,edges,expanded_edges,total_weight_sats\n";
    for (const auto& g : graphs) {
      out << fmt::format("{},{},{},{},{},{}\n", g.window().label(), date_label(g.window().anchor_time), g.node_count(),
                         g.edge_count(), g.raw_edge_count(),
                         g.has_exact_weights() ? g.total_weight().get_str() : std::string("n/a"));
    }
    write_output(Stage::graph, "windows.csv", out.str());
  }

  void write_centrality() {
    const auto& c = ensure_centrality();
    std::ostringstream pct;
    std::ostringstream disp;
    pct << "date,metric,percentile,value\n";
    disp << "date,metric,H,L,M,dispersion\n";
    for (const auto metric : kAllMetrics) {
      for (const auto& w : c.by_metric[metric_index(metric)]) {
        if (w.empty) continue;
        const auto date = date_label(w.time);
        for (std::size_t k = 0; k < config_.percentiles.size(); ++k) {
          pct << fmt::format("{},{},{},{}\n", date, to_string(metric), format_real(config_.percentiles[k]),
                             format_real(w.percentiles[k]));
        }
        disp << fmt::format("{},{},{},{},{},{}\n", date, to_string(metric), format_real(w.dispersion.high),
                            format_real(w.dispersion.low), format_real(w.dispersion.median),
                            format_real(w.dispersion.dispersion));
      }
    }
    write_output(Stage::centrality, "percentiles.csv", pct.str());
    write_output(Stage::centrality, "dispersion.csv", disp.str());

    std::vector<svg::Panel> panels;
    for (const auto metric : kAllMetrics) {
      svg::Panel panel{std::string(to_string(metric)), "value", {}, {}, true};
      for (std::size_t k = 0; k < config_.percentiles.size(); ++k) {
        svg::Line line{fmt::format("p{}", format_real(config_.percentiles[k])), {}, {}, svg::palette(k), false};
        for (const auto& w : c.by_metric[metric_index(metric)]) {
          if (w.empty) continue;
          line.x.push_back(static_cast<double>(w.time));
          line.y.push_back(w.percentiles[k]);
        }
        panel.lines.push_back(std::move(line));
      }
      panels.push_back(std::move(panel));
    }
    for (const auto metric : kAllMetrics) {
      svg::Panel panel{fmt::format("{} dispersion", to_string(metric)), "d_m", {}, {}, true};
      svg::Line line{"dispersion", {}, {}, svg::palette(3), false};
      for (const auto& w : c.by_metric[metric_index(metric)]) {
        if (w.empty) continue;
        line.x.push_back(static_cast<double>(w.time));
        line.y.push_back(w.dispersion.dispersion);
      }
      panel.lines.push_back(std::move(line));
      panels.push_back(std::move(panel));
    }
    write_output(Stage::centrality, "centrality.svg", svg::render("Centrality percentiles and dispersion", panels, 4));
  }

  void write_assetdist() {
    const auto& a = ensure_asset();
    std::ostringstream props;
    std::ostringstream deltas;
    std::ostringstream degrees;
    props << "date,x,proportion\n";
    deltas << "date,pair,delta\n";
    degrees << "date,D_A,D_A_unnormalized,N\n";
    for (std::size_t i = 0; i < a.curves.size(); ++i) {
      const auto date = to_iso(a.curves[i].date);
      for (const auto& p : a.curves[i].points) props << fmt::format("{},{},{}\n", date, p.x, format_real(p.proportion));
      for (const auto& d : a.deltas[i]) deltas << fmt::format("{},{}-{},{}\n", date, d.from, d.to, format_real(d.delta));
      degrees << fmt::format("{},{},{},{}\n", date, format_real(a.degrees[i].d_a), format_real(a.degrees[i].d_a_unnormalized),
                             a.degrees[i].n);
    }
    write_output(Stage::assetdist, "proportions.csv", props.str());
    write_output(Stage::assetdist, "deltas.csv", deltas.str());
    write_output(Stage::assetdist, "decentralization.csv", degrees.str());
    if (a.phases) {
      std::ostringstream phases;
      phases << "date,C1,C2,dC1,dC2,phase\n";
      const auto& s = a.phases->series;
      for (std::size_t i = 0; i < s.rows(); ++i) {
        phases << fmt::format("{},{},{},{},{},{}\n", to_iso(day_of(s.times[i])), format_real(s.columns[0][i]),
                              format_real(s.columns[1][i]), format_real(s.columns[2][i]), format_real(s.columns[3][i]),
                              a.phases->phases[i]);
      }
      write_output(Stage::assetdist, "phases.csv", phases.str());
    }

    svg::Panel share{"Share held by top-x", "proportion", {}, {}, true};
    for (std::size_t k = 0; k < config_.top_x.size(); ++k) {
      svg::Line line{fmt::format("top-{}", config_.top_x[k]), {}, {}, svg::palette(k), false};
      for (const auto& curve : a.curves) {
        line.x.push_back(static_cast<double>(curve.date.start_seconds()));
        line.y.push_back(curve.points[k].proportion);
      }
      share.lines.push_back(std::move(line));
    }
    svg::Panel diff{"Adjacent group differences", "delta", {}, {}, true};
    for (std::size_t k = 0; k + 1 < config_.top_x.size(); ++k) {
      svg::Line line{fmt::format("{}-{}", config_.top_x[k], config_.top_x[k + 1]), {}, {}, svg::palette(k), false};
      for (std::size_t i = 0; i < a.curves.size(); ++i) {
        line.x.push_back(static_cast<double>(a.curves[i].date.start_seconds()));
        line.y.push_back(a.deltas[i][k].delta);
      }
      diff.lines.push_back(std::move(line));
    }
    svg::Panel degree{"Decentralization degree D_A", "D_A", {}, {}, true};
    svg::Line line{"D_A", {}, {}, svg::palette(0), false};
    for (const auto& d : a.degrees) {
      line.x.push_back(static_cast<double>(d.date.start_seconds()));
      line.y.push_back(d.d_a);
    }
    degree.lines.push_back(std::move(line));
    for (const auto& [day, label] : config_.phases.starts) {
      for (auto* p : {&share, &diff, &degree}) p->markers.push_back({static_cast<double>(day.start_seconds()), label});
    }
    const std::vector<svg::Panel> panels{share, diff, degree};
    write_output(Stage::assetdist, "asset_distribution.svg", svg::render("Asset distribution", panels, 3));
  }

  void write_stability() {
    const auto& points = ensure_stability();
    std::ostringstream out;
    write_stability_csv(out, points);
    write_output(Stage::stability, "stability.csv", out.str());

    const RankGroup top{1, config_.top_n};
    const int first_interval = config_.intervals.front();
    auto panel_by = [&](bool spearman, bool by_interval) {
      svg::Panel panel;
      panel.title = fmt::format("{} {}", spearman ? "Spearman" : "Retention",
                                by_interval ? fmt::format("by interval (top-{})", config_.top_n)
                                            : fmt::format("by group ({}-day interval)", first_interval));
      panel.y_label = spearman ? "rho" : "retention";
      std::map<std::string, svg::Line> lines;
      std::vector<std::string> order;
      for (const auto& p : points) {
        const bool whole = p.group.first == top.first && p.group.last == top.last;
        if (by_interval ? !whole : (whole || p.interval_days != first_interval)) continue;
        const auto name = by_interval ? fmt::format("{}d", p.interval_days) : p.group.label();
        auto [it, inserted] = lines.try_emplace(name);
        if (inserted) order.push_back(name);
        it->second.x.push_back(static_cast<double>(p.date.start_seconds()));
        it->second.y.push_back(spearman ? p.spearman.value_or(std::numeric_limits<double>::quiet_NaN()) : p.retention);
      }
      for (std::size_t k = 0; k < order.size(); ++k) {
        auto line = std::move(lines[order[k]]);
        line.name = order[k];
        line.color = svg::palette(k);
        panel.lines.push_back(std::move(line));
      }
      return panel;
    };
    const std::vector<svg::Panel> panels{panel_by(true, true), panel_by(true, false), panel_by(false, true),
                                         panel_by(false, false)};
    write_output(Stage::stability, "stability.svg", svg::render("Ranking stability", panels, 2));
  }

  void write_concentration() {
    const auto& c = ensure_concentration();
    std::ostringstream out;
    out << "date,mode,hhi,d_hhi\n";
    for (std::size_t i = 0; i < c.days.size(); ++i) {
      for (std::size_t k = 0; k < config_.hhi_modes.size(); ++k) {
        out << fmt::format("{},{},{},{}\n", to_iso(c.days[i]), to_string(config_.hhi_modes[k]), format_real(c.hhi[k][i]),
                           format_real(c.d_hhi[k][i]));
      }
    }
    write_output(Stage::concentration, "hhi.csv", out.str());
    std::ostringstream communities;
    communities << "addr,community\n";
    for (std::size_t i = 0; i < c.assignment.addresses.size(); ++i) {
      communities << c.assignment.addresses[i] << ',' << c.assignment.community[i] << '\n';
    }
    communities << fmt::format("# communities={} modularity={}\n", c.assignment.community_count, format_real(c.assignment.modularity));
    write_output(Stage::concentration, "communities.csv", communities.str());
    std::ostringstream events;
    events << "event_date,label,row_date\n";
    for (const auto& a : c.annotations) {
      events << fmt::format("{},{},{}\n", to_iso(a.event.date), a.event.label, to_iso(c.days[a.row]));
    }
    write_output(Stage::concentration, "events.csv", events.str());

    svg::Panel panel{"HHI decentralization degree", "D_HHI", {}, {}, true};
    for (std::size_t k = 0; k < config_.hhi_modes.size(); ++k) {
      svg::Line line{std::string(to_string(config_.hhi_modes[k])), {}, {},
                     config_.hhi_modes[k] == EntityMode::a1_per_address ? "#ff7f0e" : "#000000", false};
      for (std::size_t i = 0; i < c.days.size(); ++i) {
        line.x.push_back(static_cast<double>(c.days[i].start_seconds()));
        line.y.push_back(c.d_hhi[k][i]);
      }
      panel.lines.push_back(std::move(line));
    }
    for (const auto& a : c.annotations) panel.markers.push_back({static_cast<double>(c.days[a.row].start_seconds()), a.event.label});
    const std::vector<svg::Panel> panels{panel};
    write_output(Stage::concentration, "hhi.svg", svg::render("Market concentration", panels, 1));
  }

  void write_features() {
    ensure_features();
    std::ostringstream out;
    write_features_csv(out, *features_);
    write_output(Stage::features, "features.csv", out.str());
  }

  void write_forecast() {
    ensure_features();
    std::vector<std::vector<FeatureSet>> selections;
    if (config_.ablation) {
      selections = {{FeatureSet::centrality},
                    {FeatureSet::centrality, FeatureSet::asset},
                    {FeatureSet::centrality, FeatureSet::rank},
                    {FeatureSet::centrality, FeatureSet::asset, FeatureSet::rank}};
    } else {
      selections = {config_.feature_sets};
    }
    ForecastOutcome outcome;
    for (const auto& sets : selections) {
      const auto matrix = assemble_features(sources_, sets, *target_);
      for (const auto model : config_.models) {
        outcome.results.push_back(forecast(model, matrix, config_.history, config_.horizon));
        outcome.labels.push_back(feature_sets_label(sets));
      }
    }
    std::ostringstream out;
    write_forecast_csv(out, outcome.results, outcome.labels);
    write_output(Stage::forecast, "report.csv", out.str());
  }

  const PipelineConfig& config_;
  fs::path out_;
  std::map<Stage, std::string> keys_;
  std::mutex outputs_mutex_;
  std::map<Stage, std::map<std::string, std::string>> written_;

  std::optional<TransactionLog> log_;
  std::optional<DailyLedger> daily_;
  std::optional<std::vector<GraphSnapshot>> graphs_;
  std::optional<CentralityResult> centrality_;
  std::optional<AssetResult> asset_;
  std::optional<std::vector<StabilityPoint>> stability_;
  std::optional<ConcentrationResult> concentration_;
  std::vector<DailySeries> sources_;
  std::optional<TargetSeries> target_;
  std::optional<FeatureMatrix> features_;
};

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::ledger: return "ledger";
    case Stage::graph: return "graph";
    case Stage::centrality: return "centrality";
    case Stage::assetdist: return "assetdist";
    case Stage::stability: return "stability";
    case Stage::concentration: return "concentration";
    case Stage::features: return "features";
    case Stage::forecast: return "forecast";
  }
  return "?";
}

StageError::StageError(Stage stage, const std::string& cause)
    : Error(fmt::format("stage {} failed: {}", to_string(stage), cause)), stage_(stage) {}

RunReport run_pipeline(const PipelineConfig& config, Stage last) {
  const Stage targets[] = {last};
  return run_pipeline(config, targets);
}

RunReport run_pipeline(const PipelineConfig& config, std::span<const Stage> targets) {
  config.validate();
  return Pipeline(config).run(targets);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read manifest '{}'", path.string()));
  std::vector<ManifestEntry> entries;
  std::string row;
  std::getline(in, row);
  while (std::getline(in, row)) {
    const auto a = row.find(',');
    const auto b = row.rfind(',');
    if (a == std::string::npos || a == b) throw Error(fmt::format("malformed manifest row '{}'", row));
    entries.push_back({row.substr(0, a), row.substr(a + 1, b - a - 1), std::stoull(row.substr(b + 1))});
  }
  return entries;
}

}  // namespace ledgerscope
