#include "ledgerscope/ledger.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include <fmt/format.h>

namespace ledgerscope {

namespace {

bool ranks_before(const std::pair<const std::string*, Satoshi>& a, const std::pair<const std::string*, Satoshi>& b) {
  if (a.second != b.second) return a.second > b.second;
  return *a.first < *b.first;
}

template <typename Range>
RankingList rank(const Range& balances, std::size_t n, Day date) {
  std::vector<std::pair<const std::string*, Satoshi>> items;
  items.reserve(balances.size());
  for (const auto& [address, value] : balances) {
    if (value > 0) items.emplace_back(&address, value);
  }
  const std::size_t k = std::min(n, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(), ranks_before);
  RankingList list;
  list.date = date;
  list.entries.reserve(k);
  for (std::size_t i = 0; i < k; ++i) list.entries.push_back({i + 1, *items[i].first, items[i].second});
  return list;
}

}  // namespace

Satoshi RankingList::total() const {
  Satoshi sum = 0;
  for (const auto& e : entries) sum += e.balance;
  return sum;
}

void LedgerState::apply(const Transaction& tx) {
  std::map<std::string_view, Satoshi> debits;
  for (const auto& in : tx.inputs) debits[in.address] += in.value;
  for (const auto& [address, amount] : debits) {
    const auto it = balances_.find(std::string(address));
    const Satoshi have = it == balances_.end() ? 0 : it->second;
    if (have < amount) {
      throw ValidationError(fmt::format("transaction {}: address {} spends {} but holds {}", tx.txid, address, amount, have));
    }
  }
  for (const auto& [address, amount] : debits) {
    const auto it = balances_.find(std::string(address));
    it->second -= amount;
    if (it->second == 0) balances_.erase(it);
  }
  for (const auto& out : tx.outputs) {
    if (out.value > 0) balances_[out.address] += out.value;
  }
  if (tx.is_coinbase()) {
    coinbase_total_ += tx.output_total();
  } else {
    fees_paid_ += compute_fee(tx);
  }
}

Satoshi LedgerState::balance(const std::string& address) const {
  const auto it = balances_.find(address);
  return it == balances_.end() ? 0 : it->second;
}

BalanceSnapshot LedgerState::snapshot(Day date) const {
  BalanceSnapshot snap;
  snap.date = date;
  snap.balances.assign(balances_.begin(), balances_.end());
  std::sort(snap.balances.begin(), snap.balances.end());
  snap.total_supply = total_supply();
  return snap;
}

RankingList LedgerState::top_n(std::size_t n, Day date) const { return rank(balances_, n, date); }

RankingList top_n(const BalanceSnapshot& snapshot, std::size_t n) {
  if (n == 0) throw ValidationError("top-N size must be at least 1");
  return rank(snapshot.balances, n, snapshot.date);
}

LedgerState replay(const TransactionLog& log) {
  LedgerState state;
  for (const auto& tx : log.transactions()) state.apply(tx);
  return state;
}

DailyLedger replay_daily(const TransactionLog& log, std::size_t n) {
  if (n == 0) throw ValidationError("top-N size must be at least 1");
  DailyLedger daily;
  if (log.empty()) return daily;
  const auto txs = log.transactions();
  const Day first = day_of(txs.front().timestamp);
  Day last = first;
  for (const auto& tx : txs) last = std::max(last, day_of(tx.timestamp));

  LedgerState state;
  std::size_t next = 0;
  for (Day d = first; d <= last; d = d + 1) {
    Satoshi fees = 0;
    // Log order is authoritative; a transaction stamped earlier than its
    // predecessor is applied with it rather than reordered.
    while (next < txs.size() && txs[next].timestamp < d.end_seconds()) {
      state.apply(txs[next]);
      if (!txs[next].is_coinbase()) fees += compute_fee(txs[next]);
      ++next;
    }
    daily.days.push_back(d);
    daily.rankings.push_back(state.top_n(n, d));
    daily.supply.push_back(state.total_supply());
    daily.fees.push_back(fees);
  }
  return daily;
}

void write_rankings_csv(std::ostream& out, const std::vector<RankingList>& rankings) {
  out << "date,addr,balance_sats,rank\n";
  for (const auto& list : rankings) {
    const auto date = to_iso(list.date);
    for (const auto& e : list.entries) out << fmt::format("{},{},{},{}\n", date, e.address, e.balance, e.rank);
  }
}

void write_supply_csv(std::ostream& out, const DailyLedger& daily) {
  out << "date,total_supply_sats\n";
  for (std::size_t i = 0; i < daily.days.size(); ++i) out << fmt::format("{},{}\n", to_iso(daily.days[i]), daily.supply[i]);
}

}  // namespace ledgerscope
