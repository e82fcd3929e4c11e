#include "ledgerscope/txmodel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace ledgerscope {

namespace {

using Json = nlohmann::ordered_json;

Satoshi checked_sum(const std::vector<TxEndpoint>& side, const std::string& txid) {
  Satoshi total = 0;
  for (const auto& e : side) {
    if (__builtin_add_overflow(total, e.value, &total)) {
      throw ValidationError(fmt::format("transaction {}: value sum overflows", txid));
    }
  }
  return total;
}

std::int64_t json_integer(const Json& v, std::size_t line, std::string_view field) {
  if (!v.is_number_integer()) throw ParseError(line, fmt::format("field '{}' must be an integer", field));
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw ParseError(line, fmt::format("field '{}' out of range", field));
    }
    return static_cast<std::int64_t>(u);
  }
  return v.get<std::int64_t>();
}

std::vector<TxEndpoint> json_side(const Json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) throw ParseError(line, fmt::format("missing array '{}'", key));
  std::vector<TxEndpoint> side;
  side.reserve(it->size());
  for (const auto& e : *it) {
    if (!e.is_object()) throw ParseError(line, fmt::format("'{}' entries must be objects", key));
    const auto addr = e.find("addr");
    const auto value = e.find("value");
    if (addr == e.end() || !addr->is_string()) throw ParseError(line, "endpoint needs string 'addr'");
    if (value == e.end()) throw ParseError(line, "endpoint needs integer 'value'");
    const auto v = json_integer(*value, line, "value");
    if (v < 0) throw ParseError(line, fmt::format("negative value {} for address {}", v, addr->get<std::string>()));
    side.push_back({addr->get<std::string>(), v});
  }
  return side;
}

void check_declared_unit(std::int64_t declared, std::size_t line) {
  if (declared != kSatoshisPerCoin) {
    throw ParseError(line, fmt::format("unsupported satoshis_per_coin {} (expected {})", declared, kSatoshisPerCoin));
  }
}

void validate_at(const Transaction& tx, std::size_t line) {
  try {
    validate_transaction(tx);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("line {}: {}", line, e.what()));
  }
}

std::vector<Transaction> parse_jsonl(std::istream& in) {
  std::vector<Transaction> txs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(line, fmt::format("malformed JSON: {}", e.what()));
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
    if (!obj.contains("txid") && obj.contains("satoshis_per_coin")) {
      check_declared_unit(json_integer(obj["satoshis_per_coin"], line, "satoshis_per_coin"), line);
      continue;
    }
    Transaction tx;
    const auto txid = obj.find("txid");
    if (txid == obj.end() || !txid->is_string()) throw ParseError(line, "missing string 'txid'");
    tx.txid = txid->get<std::string>();
    const auto height = obj.find("height");
    const auto time = obj.find("time");
    if (height == obj.end()) throw ParseError(line, "missing 'height'");
    if (time == obj.end()) throw ParseError(line, "missing 'time'");
    const auto h = json_integer(*height, line, "height");
    if (h < 0) throw ParseError(line, "negative block height");
    tx.block_height = static_cast<std::uint64_t>(h);
    tx.timestamp = json_integer(*time, line, "time");
    tx.inputs = json_side(obj, "inputs", line);
    tx.outputs = json_side(obj, "outputs", line);
    validate_at(tx, line);
    txs.push_back(std::move(tx));
  }
  return txs;
}

std::vector<std::string_view> split_commas(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(row.substr(start));
      break;
    }
    fields.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::int64_t csv_integer(std::string_view field, std::size_t line, std::string_view name) {
  std::int64_t v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw ParseError(line, fmt::format("field '{}' is not an integer: '{}'", name, field));
  }
  return v;
}

std::vector<Transaction> parse_csv(std::istream& in) {
  std::vector<Transaction> txs;
  std::vector<std::size_t> first_lines;
  std::string text;
  std::size_t line = 0;
  bool header_allowed = true;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    if (text.front() == '#') {
      constexpr std::string_view key = "# satoshis_per_coin=";
      if (text.starts_with(key)) check_declared_unit(csv_integer(std::string_view(text).substr(key.size()), line, "satoshis_per_coin"), line);
      continue;
    }
    if (header_allowed && text == "txid,height,time,side,addr,value") {
      header_allowed = false;
      continue;
    }
    header_allowed = false;
    const auto f = split_commas(text);
    if (f.size() != 6) throw ParseError(line, fmt::format("expected 6 columns, found {}", f.size()));
    if (f[0].empty()) throw ParseError(line, "empty txid");
    const auto height = csv_integer(f[1], line, "height");
    if (height < 0) throw ParseError(line, "negative block height");
    const auto time = csv_integer(f[2], line, "time");
    const auto value = csv_integer(f[5], line, "value");
    if (value < 0) throw ParseError(line, fmt::format("negative value {} for address {}", value, f[4]));
    if (f[3] != "in" && f[3] != "out") throw ParseError(line, fmt::format("side must be 'in' or 'out', got '{}'", f[3]));

    if (txs.empty() || txs.back().txid != f[0]) {
      Transaction tx;
      tx.txid = std::string(f[0]);
      tx.block_height = static_cast<std::uint64_t>(height);
      tx.timestamp = time;
      txs.push_back(std::move(tx));
      first_lines.push_back(line);
    } else if (txs.back().block_height != static_cast<std::uint64_t>(height) || txs.back().timestamp != time) {
      throw ParseError(line, fmt::format("transaction {} has inconsistent height/time across rows", f[0]));
    }
    auto& side = f[3] == "in" ? txs.back().inputs : txs.back().outputs;
    side.push_back({std::string(f[4]), value});
  }
  for (std::size_t i = 0; i < txs.size(); ++i) validate_at(txs[i], first_lines[i]);
  return txs;
}

}  // namespace

Satoshi Transaction::input_total() const { return checked_sum(inputs, txid); }
Satoshi Transaction::output_total() const { return checked_sum(outputs, txid); }

void validate_transaction(const Transaction& tx) {
  for (const auto* side : {&tx.inputs, &tx.outputs}) {
    for (const auto& e : *side) {
      if (e.value < 0) throw ValidationError(fmt::format("transaction {}: negative value at {}", tx.txid, e.address));
    }
  }
  if (tx.outputs.empty()) throw ValidationError(fmt::format("transaction {} rejected: no outputs", tx.txid));
  if (!tx.is_coinbase() && tx.output_total() > tx.input_total()) {
    throw ValidationError(fmt::format("transaction {} rejected: outputs {} exceed inputs {}", tx.txid,
                                      tx.output_total(), tx.input_total()));
  }
}

Satoshi compute_fee(const Transaction& tx) {
  if (tx.is_coinbase()) throw ValidationError(fmt::format("fee undefined for coinbase transaction {}", tx.txid));
  const Satoshi fee = tx.input_total() - tx.output_total();
  if (fee < 0) throw ValidationError(fmt::format("transaction {} has negative fee", tx.txid));
  return fee;
}

TransactionLog::TransactionLog(std::vector<Transaction> transactions) : transactions_(std::move(transactions)) {
  for (std::size_t i = 0; i < transactions_.size(); ++i) {
    validate_transaction(transactions_[i]);
    if (i > 0 && transactions_[i].block_height < transactions_[i - 1].block_height) {
      throw ValidationError(fmt::format("transaction {} at position {}: block height {} decreases (previous {})",
                                        transactions_[i].txid, i, transactions_[i].block_height,
                                        transactions_[i - 1].block_height));
    }
  }
}

LogFormat parse_log_format(std::string_view name) {
  if (name == "jsonl") return LogFormat::jsonl;
  if (name == "csv") return LogFormat::csv;
  throw ValidationError(fmt::format("unknown log format '{}' (expected jsonl or csv)", name));
}

TransactionLog parse_transactions(std::istream& in, LogFormat format) {
  return TransactionLog(format == LogFormat::jsonl ? parse_jsonl(in) : parse_csv(in));
}

TransactionLog read_transaction_file(const std::string& path, LogFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open transaction log '{}'", path));
  return parse_transactions(in, format);
}

void write_transactions(std::ostream& out, const TransactionLog& log, LogFormat format) {
  if (format == LogFormat::jsonl) {
    out << Json{{"satoshis_per_coin", kSatoshisPerCoin}}.dump() << '\n';
    for (const auto& tx : log.transactions()) {
      Json obj;
      obj["txid"] = tx.txid;
      obj["height"] = tx.block_height;
      obj["time"] = tx.timestamp;
      for (const auto* key : {"inputs", "outputs"}) {
        Json side = Json::array();
        for (const auto& e : key[0] == 'i' ? tx.inputs : tx.outputs) side.push_back(Json{{"addr", e.address}, {"value", e.value}});
        obj[key] = std::move(side);
      }
      out << obj.dump() << '\n';
    }
    return;
  }
  out << "# satoshis_per_coin=" << kSatoshisPerCoin << '\n';
  out << "txid,height,time,side,addr,value\n";
  for (const auto& tx : log.transactions()) {
    for (const auto& e : tx.inputs) out << fmt::format("{},{},{},in,{},{}\n", tx.txid, tx.block_height, tx.timestamp, e.address, e.value);
    for (const auto& e : tx.outputs) out << fmt::format("{},{},{},out,{},{}\n", tx.txid, tx.block_height, tx.timestamp, e.address, e.value);
  }
}

LogStats summarize(const TransactionLog& log) {
  LogStats s;
  s.transactions = log.size();
  std::set<std::string_view> addresses;
  std::vector<Satoshi> values;
  values.reserve(log.size());
  for (const auto& tx : log.transactions()) {
    for (const auto& e : tx.inputs) addresses.insert(e.address);
    for (const auto& e : tx.outputs) addresses.insert(e.address);
    if (tx.is_coinbase()) {
      ++s.coinbase_transactions;
    } else {
      s.total_fees += compute_fee(tx);
    }
    values.push_back(tx.output_total());
    s.total_value += values.back();
    s.max_value = std::max(s.max_value, values.back());
  }
  s.addresses = addresses.size();
  if (!log.empty()) {
    s.first_height = log[0].block_height;
    s.last_height = log[log.size() - 1].block_height;
    s.average_value = static_cast<double>(s.total_value) / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    s.median_value = n % 2 == 1 ? static_cast<double>(values[n / 2])
                                : (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2])) / 2.0;
  }
  return s;
}

void write_stats_csv(std::ostream& out, const LogStats& s) {
  const auto coin = [](double sats) { return format_real(sats / static_cast<double>(kSatoshisPerCoin)); };
  out << "statistic,value\n";
  out << "transactions," << s.transactions << '\n';
  out << "coinbase_transactions," << s.coinbase_transactions << '\n';
  out << "addresses," << s.addresses << '\n';
  out << "first_height," << s.first_height << '\n';
  out << "last_height," << s.last_height << '\n';
  out << "total_value_coin," << coin(static_cast<double>(s.total_value)) << '\n';
  out << "average_value_coin," << coin(s.average_value) << '\n';
  out << "max_value_coin," << coin(static_cast<double>(s.max_value)) << '\n';
  out << "median_value_coin," << coin(s.median_value) << '\n';
  out << "total_fees_coin," << coin(static_cast<double>(s.total_fees)) << '\n';
}

}  // namespace ledgerscope
