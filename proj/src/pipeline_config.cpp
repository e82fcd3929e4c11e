#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ledgerscope/pipeline.hpp"

namespace ledgerscope {

namespace {

using Json = nlohmann::json;

template <typename T>
void read_if(const Json& obj, const char* key, T& target) {
  if (const auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

SyntheticChainConfig parse_synthetic(const Json& j) {
  SyntheticChainConfig s;
  read_if(j, "blocks", s.blocks);
  read_if(j, "tx_per_block", s.tx_per_block);
  read_if(j, "address_growth", s.address_growth);
  read_if(j, "subsidy", s.subsidy);
  read_if(j, "concentration", s.concentration);
  if (const auto it = j.find("concentration_end"); it != j.end() && !it->is_null()) s.concentration_end = it->get<double>();
  read_if(j, "whale_count", s.whale_count);
  read_if(j, "max_fee", s.max_fee);
  read_if(j, "genesis_time", s.genesis_time);
  read_if(j, "block_interval", s.block_interval);
  read_if(j, "seed", s.seed);
  return s;
}

}  // namespace

void PipelineConfig::validate() const {
  if (input_path.has_value() == synthetic.has_value()) {
    throw ValidationError("config needs exactly one of 'input' or 'synthetic'");
  }
  if (synthetic) synthetic->validate();
  if (top_n == 0) throw ValidationError("top_n must be positive");
  if (top_x.empty() || !std::is_sorted(top_x.begin(), top_x.end()) || top_x.front() == 0) {
    throw ValidationError("top_x must be a non-empty ascending list of positive cutoffs");
  }
  if (top_x.size() < 2) throw ValidationError("top_x needs at least two cutoffs for adjacent differences");
  if (intervals.empty()) throw ValidationError("intervals must not be empty");
  for (const int n : intervals) {
    if (n <= 0) throw ValidationError("intervals must be positive");
  }
  if (group_width == 0) throw ValidationError("group_width must be positive");
  for (const double p : percentiles) {
    if (!(p >= 0.0 && p <= 100.0)) throw ValidationError(fmt::format("percentile {} outside [0,100]", p));
  }
  if (!(pagerank.damping > 0.0 && pagerank.damping < 1.0)) throw ValidationError("pagerank damping must lie in (0,1)");
  if (!(pagerank.tolerance > 0.0) || pagerank.max_iterations == 0) throw ValidationError("invalid pagerank tolerance/max_iterations");
  if (betweenness.pivots == 0) throw ValidationError("betweenness pivots must be positive");
  if (hhi_modes.empty()) throw ValidationError("hhi modes must not be empty");
  if (feature_sets.empty()) throw ValidationError("feature sets must not be empty");
  if (rank_feature_interval <= 0) throw ValidationError("rank feature interval must be positive");
  if (models.empty()) throw ValidationError("forecast models must not be empty");
  if (history == 0 || horizon == 0) throw ValidationError("forecast history and horizon must be positive");
  if (threads == 0) throw ValidationError("threads must be positive");
}

void PipelineConfig::set_seed(std::uint64_t value) {
  seed = value;
  if (synthetic) synthetic->seed = value;
  betweenness.seed = value;
}

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    const Json j = Json::parse(json_text);
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    if (const auto it = j.find("input"); it != j.end()) {
      std::filesystem::path p = it->at("path").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      c.input_path = p.string();
      if (it->contains("format")) c.input_format = parse_log_format(it->at("format").get<std::string>());
    }
    if (const auto it = j.find("synthetic"); it != j.end()) c.synthetic = parse_synthetic(*it);
    if (const auto it = j.find("window"); it != j.end()) c.window = parse_window_mode(it->get<std::string>());
    if (const auto it = j.find("edges"); it != j.end()) {
      if (it->contains("rule")) {
        const auto rule = it->at("rule").get<std::string>();
        if (rule == "bilinear") {
          c.graph.edges.rule = WeightRule::bilinear;
        } else if (rule == "equal_input") {
          c.graph.edges.rule = WeightRule::equal_input;
        } else {
          throw ValidationError(fmt::format("unknown edge weight rule '{}'", rule));
        }
      }
      read_if(*it, "self_edges", c.graph.edges.keep_self_edges);
      read_if(*it, "exact_weights", c.graph.exact_weights);
    }
    read_if(j, "top_n", c.top_n);
    read_if(j, "top_x", c.top_x);
    read_if(j, "intervals", c.intervals);
    read_if(j, "group_width", c.group_width);
    read_if(j, "percentiles", c.percentiles);
    if (const auto it = j.find("pagerank"); it != j.end()) {
      read_if(*it, "damping", c.pagerank.damping);
      read_if(*it, "tolerance", c.pagerank.tolerance);
      read_if(*it, "max_iterations", c.pagerank.max_iterations);
    }
    if (const auto it = j.find("betweenness"); it != j.end()) {
      read_if(*it, "exact_threshold", c.betweenness.exact_threshold);
      read_if(*it, "pivots", c.betweenness.pivots);
    }
    if (const auto it = j.find("phases"); it != j.end()) {
      c.phases.starts.clear();
      for (const auto& p : *it) c.phases.starts.emplace_back(parse_iso_day(p.at("start").get<std::string>()), p.at("label").get<std::string>());
    }
    if (const auto it = j.find("hhi"); it != j.end()) {
      if (it->contains("modes")) {
        c.hhi_modes.clear();
        for (const auto& m : it->at("modes")) c.hhi_modes.push_back(parse_entity_mode(m.get<std::string>()));
      }
      if (it->contains("normalization")) {
        const auto n = it->at("normalization").get<std::string>();
        if (n != "max" && n != "minmax") throw ValidationError(fmt::format("unknown HHI normalization '{}'", n));
        c.hhi_min_max = n == "minmax";
      }
    }
    if (const auto it = j.find("events"); it != j.end()) {
      c.events.clear();
      for (const auto& e : *it) c.events.push_back({parse_iso_day(e.at("date").get<std::string>()), e.at("label").get<std::string>()});
    }
    if (const auto it = j.find("features"); it != j.end()) {
      if (it->contains("sets")) {
        c.feature_sets.clear();
        for (const auto& s : it->at("sets")) c.feature_sets.push_back(parse_feature_set(s.get<std::string>()));
      }
      if (it->contains("target")) {
        const auto& t = it->at("target");
        if (t.is_string() && t.get<std::string>() == "fee") {
          c.target_csv.reset();
          c.target_name = "fee_per_day";
        } else if (t.is_object()) {
          std::filesystem::path p = t.at("csv").get<std::string>();
          if (p.is_relative()) p = base_dir / p;
          c.target_csv = p.string();
          c.target_name = t.value("name", std::string("external"));
        } else {
          throw ValidationError("features.target must be \"fee\" or {\"csv\": path, \"name\": label}");
        }
      }
      read_if(*it, "rank_interval", c.rank_feature_interval);
    }
    if (const auto it = j.find("forecast"); it != j.end()) {
      if (it->contains("models")) {
        c.models.clear();
        for (const auto& m : it->at("models")) c.models.push_back(parse_forecast_model(m.get<std::string>()));
      }
      read_if(*it, "history", c.history);
      read_if(*it, "horizon", c.horizon);
      read_if(*it, "ablation", c.ablation);
    }
    if (const auto it = j.find("out_dir"); it != j.end()) {
      std::filesystem::path p = it->get<std::string>();
      c.out_dir = p.is_relative() ? base_dir / p : p;
    }
    if (j.contains("seed")) {
      c.seed = j.at("seed").get<std::uint64_t>();
    } else if (c.synthetic) {
      c.seed = c.synthetic->seed;
    }
    read_if(j, "threads", c.threads);
  } catch (const Json::exception& e) {
    throw ValidationError(fmt::format("invalid config: {}", e.what()));
  }
  c.set_seed(c.seed);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace ledgerscope
