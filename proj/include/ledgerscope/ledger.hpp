#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ledgerscope/common.hpp"
#include "ledgerscope/txmodel.hpp"

namespace ledgerscope {

struct BalanceSnapshot {
  Day date;
  // Sorted by address; zero balances omitted.
  std::vector<std::pair<std::string, Satoshi>> balances;
  Satoshi total_supply = 0;

  friend bool operator==(const BalanceSnapshot&, const BalanceSnapshot&) = default;
};

struct RankedAddress {
  std::size_t rank = 0;
  std::string address;
  Satoshi balance = 0;

  friend bool operator==(const RankedAddress&, const RankedAddress&) = default;
};

// Balances non-increasing with rank, ranks contiguous from 1; equal balances
// ordered by ascending address.
struct RankingList {
  Day date;
  std::vector<RankedAddress> entries;

  std::size_t size() const { return entries.size(); }
  Satoshi total() const;

  friend bool operator==(const RankingList&, const RankingList&) = default;
};

// Per-address balances maintained by replaying transactions in log order.
class LedgerState {
 public:
  // Debits every input, credits every output. Throws ValidationError naming
  // the address and txid on overspend; the state is unchanged in that case.
  void apply(const Transaction& tx);

  Satoshi balance(const std::string& address) const;
  std::size_t address_count() const { return balances_.size(); }

  // Sum of all balances: coinbase outputs minus fees paid so far. At block
  // boundaries of a chain whose coinbases claim their own block's fees this
  // is exactly the cumulative minted subsidy.
  Satoshi total_supply() const { return coinbase_total_ - fees_paid_; }
  Satoshi coinbase_total() const { return coinbase_total_; }
  Satoshi fees_paid() const { return fees_paid_; }

  BalanceSnapshot snapshot(Day date) const;
  RankingList top_n(std::size_t n, Day date) const;

 private:
  std::unordered_map<std::string, Satoshi> balances_;
  Satoshi coinbase_total_ = 0;
  Satoshi fees_paid_ = 0;
};

RankingList top_n(const BalanceSnapshot& snapshot, std::size_t n);

// State after each calendar day (end-of-day boundary) from the first to the
// last transaction's day, including days without transactions.
struct DailyLedger {
  std::vector<Day> days;
  std::vector<RankingList> rankings;
  std::vector<Satoshi> supply;
  // Sum of computeFee over each day's non-coinbase transactions.
  std::vector<Satoshi> fees;
};

DailyLedger replay_daily(const TransactionLog& log, std::size_t top_n);

// Replays the whole log and reports the final state.
LedgerState replay(const TransactionLog& log);

void write_rankings_csv(std::ostream& out, const std::vector<RankingList>& rankings);
void write_supply_csv(std::ostream& out, const DailyLedger& daily);

}  // namespace ledgerscope
