#include "ledgerscope/graphbuild.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

namespace ledgerscope {

namespace {

// Emits (src, dst, exact weight or nullptr, double weight) per expanded edge.
template <typename Emit>
void for_each_edge(const Transaction& tx, const EdgeOptions& options, bool exact, Emit&& emit) {
  if (tx.is_coinbase()) return;
  std::map<std::string_view, Satoshi> ins;
  std::map<std::string_view, Satoshi> outs;
  for (const auto& e : tx.inputs) {
    if (e.value > 0) ins[e.address] += e.value;
  }
  Satoshi out_total = 0;
  for (const auto& e : tx.outputs) {
    if (e.value > 0) {
      outs[e.address] += e.value;
      out_total += e.value;
    }
  }
  if (ins.empty() || outs.empty()) return;
  const auto n_inputs = static_cast<long>(ins.size());
  for (const auto& [src, in_value] : ins) {
    for (const auto& [dst, out_value] : outs) {
      if (!options.keep_self_edges && src == dst) continue;
      if (exact) {
        Rational w = options.rule == WeightRule::bilinear
                         ? Rational(mpz_class(in_value) * mpz_class(out_value), mpz_class(out_total))
                         : Rational(mpz_class(out_value), mpz_class(n_inputs));
        w.canonicalize();
        emit(src, dst, &w, w.get_d());
      } else {
        const double w = options.rule == WeightRule::bilinear
                             ? static_cast<double>(in_value) * static_cast<double>(out_value) / static_cast<double>(out_total)
                             : static_cast<double>(out_value) / static_cast<double>(n_inputs);
        emit(src, dst, nullptr, w);
      }
    }
  }
}

}  // namespace

std::vector<WeightedEdge> expand_edges(const Transaction& tx, const EdgeOptions& options) {
  std::vector<WeightedEdge> edges;
  for_each_edge(tx, options, true, [&](std::string_view src, std::string_view dst, const Rational* w, double) {
    edges.push_back({std::string(src), std::string(dst), *w});
  });
  return edges;
}

Window Window::blocks(std::uint64_t first, std::uint64_t last) {
  Window w;
  w.kind = Kind::blocks;
  w.first_block = first;
  w.last_block = last;
  return w;
}

Window Window::time(std::int64_t start, std::int64_t end) {
  Window w;
  w.kind = Kind::time;
  w.start = start;
  w.end = end;
  w.anchor_time = start;
  return w;
}

bool Window::contains(const Transaction& tx) const {
  if (kind == Kind::blocks) return tx.block_height >= first_block && tx.block_height <= last_block;
  return tx.timestamp >= start && tx.timestamp < end;
}

std::string Window::label() const {
  if (kind == Kind::blocks) {
    return first_block == last_block ? fmt::format("block {}", first_block)
                                     : fmt::format("blocks {}-{}", first_block, last_block);
  }
  if (end - start == 86400 && start % 86400 == 0) return to_iso(day_of(start));
  return fmt::format("{}..{}", to_iso_timestamp(start), to_iso_timestamp(end));
}

WindowMode parse_window_mode(std::string_view name) {
  if (name == "per-block") return WindowMode::per_block;
  if (name == "per-day") return WindowMode::per_day;
  if (name == "cumulative") return WindowMode::cumulative;
  throw ValidationError(fmt::format("unknown window mode '{}' (expected per-block, per-day or cumulative)", name));
}

std::string_view to_string(WindowMode mode) {
  switch (mode) {
    case WindowMode::per_block: return "per-block";
    case WindowMode::per_day: return "per-day";
    case WindowMode::cumulative: return "cumulative";
  }
  return "?";
}

GraphSnapshot::GraphSnapshot(Window window, std::vector<std::string> nodes, std::vector<Edge> edges,
                             std::size_t raw_edge_count, bool exact)
    : window_(std::move(window)),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      raw_edge_count_(raw_edge_count),
      exact_(exact) {
  const std::size_t n = nodes_.size();
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++out_offsets_[e.src + 1];
    ++in_offsets_[e.dst + 1];
  }
  for (std::size_t v = 0; v < n; ++v) {
    out_offsets_[v + 1] += out_offsets_[v];
    in_offsets_[v + 1] += in_offsets_[v];
  }
  out_targets_.resize(edges_.size());
  out_weights_.resize(edges_.size());
  in_sources_.resize(edges_.size());
  // Edges are sorted by (src, dst), so successor lists come out sorted.
  std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    out_targets_[i] = edges_[i].dst;
    out_weights_[i] = edges_[i].weight;
    in_sources_[in_fill[edges_[i].dst]++] = edges_[i].src;
  }
}

std::optional<std::uint32_t> GraphSnapshot::find(std::string_view address) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), address);
  if (it == nodes_.end() || *it != address) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes_.begin());
}

Rational GraphSnapshot::total_weight() const {
  if (!exact_) throw Error("graph was built without exact weights");
  Rational total = 0;
  for (const auto& e : edges_) total += e.exact_weight;
  return total;
}

void GraphSnapshot::write_edges_csv(std::ostream& out) const {
  out << "src,dst,weight_sats\n";
  for (const auto& e : edges_) {
    out << nodes_[e.src] << ',' << nodes_[e.dst] << ',';
    if (exact_) {
      out << e.exact_weight.get_str();
    } else {
      out << format_real(e.weight);
    }
    out << '\n';
  }
}

GraphBuilder::GraphBuilder(GraphOptions options) : options_(std::move(options)) {}

std::uint32_t GraphBuilder::intern(const std::string& address) {
  const auto [it, inserted] = ids_.try_emplace(address, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(address);
  return it->second;
}

void GraphBuilder::add(const Transaction& tx) {
  const auto& filter = options_.node_filter;
  for_each_edge(tx, options_.edges, options_.exact_weights,
                [&](std::string_view src, std::string_view dst, const Rational* exact, double w) {
                  if (filter && (!filter->contains(std::string(src)) || !filter->contains(std::string(dst)))) return;
                  const std::uint64_t key = (std::uint64_t{intern(std::string(src))} << 32) | intern(std::string(dst));
                  auto& slot = edges_[key];
                  slot.weight += w;
                  if (exact) slot.exact += *exact;
                  ++raw_edges_;
                });
}

GraphSnapshot GraphBuilder::snapshot(const Window& window) const {
  std::vector<std::uint32_t> used;
  used.reserve(names_.size());
  std::vector<char> seen(names_.size(), 0);
  for (const auto& [key, acc] : edges_) {
    for (const auto id : {static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key & 0xffffffffu)}) {
      if (!seen[id]) {
        seen[id] = 1;
        used.push_back(id);
      }
    }
  }
  std::sort(used.begin(), used.end(), [&](std::uint32_t a, std::uint32_t b) { return names_[a] < names_[b]; });
  std::vector<std::uint32_t> remap(names_.size(), 0);
  std::vector<std::string> nodes;
  nodes.reserve(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) {
    remap[used[i]] = static_cast<std::uint32_t>(i);
    nodes.push_back(names_[used[i]]);
  }
  std::vector<GraphSnapshot::Edge> edges;
  edges.reserve(edges_.size());
  for (const auto& [key, acc] : edges_) {
    GraphSnapshot::Edge e;
    e.src = remap[key >> 32];
    e.dst = remap[key & 0xffffffffu];
    if (options_.exact_weights) {
      e.exact_weight = acc.exact;
      e.weight = acc.exact.get_d();
    } else {
      e.weight = acc.weight;
    }
    edges.push_back(std::move(e));
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  return GraphSnapshot(window, std::move(nodes), std::move(edges), raw_edges_, options_.exact_weights);
}

GraphSnapshot build_snapshot(const TransactionLog& log, const Window& window, const GraphOptions& options) {
  GraphBuilder builder(options);
  for (const auto& tx : log.transactions()) {
    if (window.contains(tx)) builder.add(tx);
  }
  return builder.snapshot(window);
}

std::vector<GraphSnapshot> build_snapshots(const TransactionLog& log, WindowMode mode, const GraphOptions& options) {
  std::vector<GraphSnapshot> snapshots;
  const auto txs = log.transactions();
  if (txs.empty()) return snapshots;

  if (mode == WindowMode::per_block) {
    std::size_t i = 0;
    while (i < txs.size()) {
      GraphBuilder builder(options);
      const auto height = txs[i].block_height;
      Window window = Window::blocks(height, height);
      window.anchor_time = txs[i].timestamp;
      for (; i < txs.size() && txs[i].block_height == height; ++i) builder.add(txs[i]);
      snapshots.push_back(builder.snapshot(window));
    }
    return snapshots;
  }

  std::map<Day, std::vector<const Transaction*>> by_day;
  for (const auto& tx : txs) by_day[day_of(tx.timestamp)].push_back(&tx);

  if (mode == WindowMode::per_day) {
    for (const auto& [day, members] : by_day) {
      GraphBuilder builder(options);
      for (const auto* tx : members) builder.add(*tx);
      snapshots.push_back(builder.snapshot(Window::day(day)));
    }
    return snapshots;
  }

  const Day first = by_day.begin()->first;
  const Day last = by_day.rbegin()->first;
  GraphBuilder builder(options);
  for (Day d = first; d <= last; d = d + 1) {
    if (const auto it = by_day.find(d); it != by_day.end()) {
      for (const auto* tx : it->second) builder.add(*tx);
    }
    Window window = Window::time(first.start_seconds(), d.end_seconds());
    window.anchor_time = d.start_seconds();
    snapshots.push_back(builder.snapshot(window));
  }
  return snapshots;
}

}  // namespace ledgerscope
