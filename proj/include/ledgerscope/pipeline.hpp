#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ledgerscope/assetdist.hpp"
#include "ledgerscope/centrality.hpp"
#include "ledgerscope/concentration.hpp"
#include "ledgerscope/features.hpp"
#include "ledgerscope/graphbuild.hpp"
#include "ledgerscope/stability.hpp"
#include "ledgerscope/txmodel.hpp"

namespace ledgerscope {

struct PipelineConfig {
  // Exactly one of input_path / synthetic is set.
  std::optional<std::string> input_path;
  LogFormat input_format = LogFormat::jsonl;
  std::optional<SyntheticChainConfig> synthetic;

  WindowMode window = WindowMode::per_block;
  GraphOptions graph;
  std::size_t top_n = 5000;
  std::vector<std::size_t> top_x = default_top_x_grid();
  std::vector<int> intervals = default_intervals();
  std::size_t group_width = 500;
  std::vector<double> percentiles = default_percentiles();
  PageRankOptions pagerank;
  BetweennessPolicy betweenness;
  PhaseBoundaries phases = PhaseBoundaries::defaults();

  std::vector<EntityMode> hhi_modes = {EntityMode::a1_per_address, EntityMode::a2_clustered};
  bool hhi_min_max = false;
  std::vector<DatedEvent> events = default_events();

  std::vector<FeatureSet> feature_sets = {FeatureSet::centrality, FeatureSet::asset, FeatureSet::rank};
  // Empty means the internal fee-per-day target.
  std::optional<std::string> target_csv;
  std::string target_name = "fee_per_day";
  int rank_feature_interval = 1;

  std::vector<ForecastModel> models = {ForecastModel::persistence, ForecastModel::linear_ar};
  std::size_t history = 7;
  std::size_t horizon = 1;
  // Run the Centrality / +Asset / +Rank / +Asset+Rank combinations.
  bool ablation = true;

  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  unsigned threads = 1;

  // Throws ValidationError.
  void validate() const;
  // One seed drives the generator, pivot sampling and clustering.
  void set_seed(std::uint64_t value);
};

// Reads a JSON config file; relative input paths resolve against the file's
// directory. Throws ValidationError for unreadable or invalid configs.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");

enum class Stage { ingest, ledger, graph, centrality, assetdist, stability, concentration, features, forecast };

std::string_view to_string(Stage stage);

struct StageReport {
  Stage stage = Stage::ingest;
  bool cached = false;
  std::vector<std::string> outputs;
};

struct ManifestEntry {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunReport {
  std::vector<StageReport> stages;
  std::vector<ManifestEntry> manifest;
};

// A stage failed; outputs written so far are kept next to a .partial marker.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& cause);
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

// Runs `last` and every stage it depends on, in dependency order. Stages whose
// cache key (stage, config subsection, upstream keys, input hash) and recorded
// output hashes still match are reported cached and not rewritten. Writes
// manifest.csv listing every output of the run with its SHA-256.
RunReport run_pipeline(const PipelineConfig& config, Stage last = Stage::forecast);
// Runs the union of the given stages and their dependencies.
RunReport run_pipeline(const PipelineConfig& config, std::span<const Stage> targets);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace ledgerscope
