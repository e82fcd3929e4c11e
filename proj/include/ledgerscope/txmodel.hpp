#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ledgerscope/common.hpp"

namespace ledgerscope {

struct TxEndpoint {
  std::string address;
  Satoshi value = 0;

  friend bool operator==(const TxEndpoint&, const TxEndpoint&) = default;
};

struct Transaction {
  std::string txid;
  std::uint64_t block_height = 0;
  std::int64_t timestamp = 0;
  std::vector<TxEndpoint> inputs;
  std::vector<TxEndpoint> outputs;

  // Coinbase transactions mint coin and carry no inputs.
  bool is_coinbase() const { return inputs.empty(); }
  Satoshi input_total() const;
  Satoshi output_total() const;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

// Throws ValidationError naming the txid when an invariant is broken:
// negative values, no outputs, or outputs exceeding inputs.
void validate_transaction(const Transaction& tx);

// Fee of a non-coinbase transaction. Throws ValidationError for coinbase.
Satoshi compute_fee(const Transaction& tx);

// Ordered, validated sequence of transactions. Immutable once built.
class TransactionLog {
 public:
  TransactionLog() = default;
  explicit TransactionLog(std::vector<Transaction> transactions);

  std::span<const Transaction> transactions() const { return transactions_; }
  std::size_t size() const { return transactions_.size(); }
  bool empty() const { return transactions_.empty(); }
  const Transaction& operator[](std::size_t i) const { return transactions_[i]; }
  Satoshi satoshis_per_coin() const { return kSatoshisPerCoin; }

  friend bool operator==(const TransactionLog&, const TransactionLog&) = default;

 private:
  std::vector<Transaction> transactions_;
};

enum class LogFormat { jsonl, csv };

LogFormat parse_log_format(std::string_view name);

// JSONL: optional header object {"satoshis_per_coin": 100000000}, then one
// {"txid","height","time","inputs","outputs"} object per line.
// CSV: txid,height,time,side,addr,value with one row per input or output;
// consecutive rows sharing a txid form one transaction.
TransactionLog parse_transactions(std::istream& in, LogFormat format);
TransactionLog read_transaction_file(const std::string& path, LogFormat format);
void write_transactions(std::ostream& out, const TransactionLog& log, LogFormat format);

struct SyntheticChainConfig {
  std::uint64_t blocks = 100;
  std::uint32_t tx_per_block = 8;
  // Probability that a payee slot goes to a brand-new address.
  double address_growth = 0.3;
  Satoshi subsidy = 50 * kSatoshisPerCoin;
  // Probability that a non-coinbase output is routed to the whale set.
  // When concentration_end is set the probability moves linearly from
  // concentration (first block) to concentration_end (last block).
  double concentration = 0.2;
  std::optional<double> concentration_end;
  std::uint32_t whale_count = 10;
  // Upper bound on a transaction's fee; also capped at a tenth of its input.
  Satoshi max_fee = 20'000;
  std::int64_t genesis_time = 1231006505;
  std::int64_t block_interval = 600;
  std::uint64_t seed = 1;

  // Throws ValidationError.
  void validate() const;
  double concentration_at(std::uint64_t height) const;
};

std::string whale_address(std::uint32_t index);

// Every block starts with one coinbase paying subsidy plus the fees of the
// block's other transactions. Spends draw from outputs created earlier,
// including earlier in the same block.
TransactionLog generate_synthetic_chain(const SyntheticChainConfig& config);

struct LogStats {
  std::size_t transactions = 0;
  std::size_t coinbase_transactions = 0;
  std::size_t addresses = 0;
  std::uint64_t first_height = 0;
  std::uint64_t last_height = 0;
  // Transaction value is the sum of a transaction's outputs.
  Satoshi total_value = 0;
  double average_value = 0.0;
  Satoshi max_value = 0;
  double median_value = 0.0;
  Satoshi total_fees = 0;
};

LogStats summarize(const TransactionLog& log);
void write_stats_csv(std::ostream& out, const LogStats& stats);

}  // namespace ledgerscope
