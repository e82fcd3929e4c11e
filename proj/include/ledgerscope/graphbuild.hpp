#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <gmpxx.h>

#include "ledgerscope/txmodel.hpp"

namespace ledgerscope {

using Rational = mpq_class;

struct WeightedEdge {
  std::string src;
  std::string dst;
  Rational weight;
};

enum class WeightRule {
  // w(i->o) = V_in(i) * V_out(o) / sum(V_out); edges sum to the input value.
  bilinear,
  // w(i->o) = V_out(o) / N; edges sum to the output value (fee dropped).
  equal_input,
};

struct EdgeOptions {
  WeightRule rule = WeightRule::bilinear;
  bool keep_self_edges = true;
};

// One edge per (distinct input address, distinct output address) pair.
// Addresses repeated on one side are merged first; zero-valued endpoints carry
// no transfer and are ignored. Coinbase transactions yield no edges.
std::vector<WeightedEdge> expand_edges(const Transaction& tx, const EdgeOptions& options = {});

struct Window {
  enum class Kind { blocks, time };

  Kind kind = Kind::blocks;
  // Inclusive block range for Kind::blocks.
  std::uint64_t first_block = 0;
  std::uint64_t last_block = 0;
  // Half-open [start, end) in unix seconds for Kind::time.
  std::int64_t start = 0;
  std::int64_t end = 0;
  // Time used to place this window on a dated series.
  std::int64_t anchor_time = 0;

  static Window blocks(std::uint64_t first, std::uint64_t last);
  static Window time(std::int64_t start, std::int64_t end);
  static Window day(Day d) { return time(d.start_seconds(), d.end_seconds()); }

  bool contains(const Transaction& tx) const;
  bool empty() const { return kind == Kind::blocks ? last_block < first_block : end <= start; }
  std::string label() const;
};

enum class WindowMode { per_block, per_day, cumulative };

WindowMode parse_window_mode(std::string_view name);
std::string_view to_string(WindowMode mode);

struct GraphOptions {
  EdgeOptions edges;
  // Keep exact rational weights alongside the double view. Disabling this
  // avoids big-number growth on long aggregation windows.
  bool exact_weights = true;
  // When set, only edges with both endpoints in this set are kept.
  std::optional<std::unordered_set<std::string>> node_filter;
};

// Weighted directed address graph. Nodes sorted by address; edges sorted by
// (src, dst) with parallel edges merged by summing weights.
class GraphSnapshot {
 public:
  struct Edge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    double weight = 0.0;
    Rational exact_weight;
  };

  GraphSnapshot() = default;
  GraphSnapshot(Window window, std::vector<std::string> nodes, std::vector<Edge> edges, std::size_t raw_edge_count,
                bool exact);

  const Window& window() const { return window_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  // Edges produced by expansion before (src,dst) aggregation.
  std::size_t raw_edge_count() const { return raw_edge_count_; }
  bool has_exact_weights() const { return exact_; }

  std::optional<std::uint32_t> find(std::string_view address) const;
  Rational total_weight() const;

  // Compressed adjacency over the unweighted structure.
  std::span<const std::uint32_t> successors(std::uint32_t v) const {
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
  }
  std::span<const double> successor_weights(std::uint32_t v) const {
    return {out_weights_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
  }
  std::span<const std::uint32_t> predecessors(std::uint32_t v) const {
    return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
  }

  void write_edges_csv(std::ostream& out) const;

 private:
  Window window_;
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::size_t raw_edge_count_ = 0;
  bool exact_ = true;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<std::uint32_t> out_targets_;
  std::vector<double> out_weights_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<std::uint32_t> in_sources_;
};

// Accumulates expanded edges; snapshot() can be taken repeatedly, which is how
// cumulative windows are built without re-reading the log.
class GraphBuilder {
 public:
  explicit GraphBuilder(GraphOptions options = {});

  void add(const Transaction& tx);
  GraphSnapshot snapshot(const Window& window) const;

 private:
  std::uint32_t intern(const std::string& address);

  GraphOptions options_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
  struct Accumulated {
    double weight = 0.0;
    Rational exact;
  };
  std::unordered_map<std::uint64_t, Accumulated> edges_;
  std::size_t raw_edges_ = 0;
};

GraphSnapshot build_snapshot(const TransactionLog& log, const Window& window, const GraphOptions& options = {});

// Per-block: one window per distinct height. Per-day: one per calendar day
// that has transactions. Cumulative: one per calendar day from the first day,
// each covering everything up to that day's end.
std::vector<GraphSnapshot> build_snapshots(const TransactionLog& log, WindowMode mode, const GraphOptions& options = {});

}  // namespace ledgerscope
