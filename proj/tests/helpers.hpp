#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ledgerscope/ledger.hpp"
#include "ledgerscope/txmodel.hpp"

namespace testing {

using ledgerscope::Satoshi;
using ledgerscope::Transaction;

using Side = std::vector<std::pair<std::string, Satoshi>>;

inline Transaction make_tx(std::string txid, std::uint64_t height, std::int64_t time, const Side& in, const Side& out) {
  Transaction tx;
  tx.txid = std::move(txid);
  tx.block_height = height;
  tx.timestamp = time;
  for (const auto& [a, v] : in) tx.inputs.push_back({a, v});
  for (const auto& [a, v] : out) tx.outputs.push_back({a, v});
  return tx;
}

inline ledgerscope::RankingList ranking(const std::vector<std::pair<std::string, Satoshi>>& entries,
                                        ledgerscope::Day date = {}) {
  ledgerscope::RankingList list;
  list.date = date;
  std::size_t rank = 1;
  for (const auto& [a, b] : entries) list.entries.push_back({rank++, a, b});
  return list;
}

// Ranking of the given balances (descending) under addresses "a0000".."a{n-1}".
inline ledgerscope::RankingList ranking_of(std::vector<Satoshi> balances) {
  std::sort(balances.rbegin(), balances.rend());
  std::vector<std::pair<std::string, Satoshi>> entries;
  for (std::size_t i = 0; i < balances.size(); ++i) entries.emplace_back("a" + std::to_string(10000 + i), balances[i]);
  return ranking(entries);
}

}  // namespace testing
