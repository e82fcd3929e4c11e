#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ledgerscope/rng.hpp"
#include "ledgerscope/txmodel.hpp"

namespace ledgerscope {

namespace {

struct Utxo {
  std::uint32_t address;
  Satoshi value;
};

class ChainBuilder {
 public:
  explicit ChainBuilder(const SyntheticChainConfig& config) : config_(config), rng_(config.seed) {
    for (std::uint32_t w = 0; w < config.whale_count; ++w) names_.push_back(whale_address(w));
  }

  TransactionLog build() {
    std::vector<Transaction> txs;
    txs.reserve(config_.blocks * (std::size_t{config_.tx_per_block} + 1));
    for (std::uint64_t h = 0; h < config_.blocks; ++h) append_block(h, txs);
    return TransactionLog(std::move(txs));
  }

 private:
  std::uint32_t fresh_address() {
    const auto id = static_cast<std::uint32_t>(names_.size());
    names_.push_back(fmt::format("addr-{:07d}", ordinary_.size()));
    ordinary_.push_back(id);
    return id;
  }

  std::uint32_t some_address() {
    if (ordinary_.empty() || rng_.chance(config_.address_growth)) return fresh_address();
    return ordinary_[rng_.below(ordinary_.size())];
  }

  std::uint32_t whale() { return static_cast<std::uint32_t>(rng_.below(config_.whale_count)); }

  // Splits amount into n positive parts (requires amount >= n).
  std::vector<Satoshi> split(Satoshi amount, std::size_t n) {
    std::vector<Satoshi> parts(n, 1);
    std::vector<std::uint64_t> weights(n);
    std::uint64_t weight_sum = 0;
    for (auto& w : weights) weight_sum += (w = 1 + rng_.below(1000));
    const Satoshi spare = amount - static_cast<Satoshi>(n);
    Satoshi given = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto share = static_cast<Satoshi>(static_cast<__int128>(spare) * weights[i] / weight_sum);
      parts[i] += share;
      given += share;
    }
    parts[n - 1] += spare - given;
    return parts;
  }

  void append_block(std::uint64_t height, std::vector<Transaction>& txs) {
    const std::int64_t time = config_.genesis_time + static_cast<std::int64_t>(height) * config_.block_interval;
    const double concentration = config_.concentration_at(height);
    const std::size_t coinbase_pos = txs.size();
    txs.emplace_back();

    Satoshi block_fees = 0;
    for (std::uint32_t k = 0; k < config_.tx_per_block && !pool_.empty(); ++k) {
      Transaction tx;
      tx.txid = fmt::format("tx-{:08d}-{:05d}", height, k + 1);
      tx.block_height = height;
      tx.timestamp = time;

      const std::size_t n_in = 1 + rng_.below(std::min<std::size_t>(3, pool_.size()));
      Satoshi total_in = 0;
      std::uint32_t spender = 0;
      for (std::size_t i = 0; i < n_in; ++i) {
        const std::size_t pick = rng_.below(pool_.size());
        const Utxo spent = pool_[pick];
        pool_[pick] = pool_.back();
        pool_.pop_back();
        if (i == 0) spender = spent.address;
        tx.inputs.push_back({names_[spent.address], spent.value});
        total_in += spent.value;
      }

      const Satoshi fee_cap = std::min(config_.max_fee, total_in / 10);
      const Satoshi fee = static_cast<Satoshi>(rng_.below(static_cast<std::uint64_t>(fee_cap) + 1));
      const Satoshi available = total_in - fee;
      const std::size_t n_out = std::min<std::size_t>(1 + rng_.below(3), static_cast<std::size_t>(available));
      const auto amounts = split(available, n_out);
      for (std::size_t slot = 0; slot < n_out; ++slot) {
        std::uint32_t payee = 0;
        if (rng_.chance(concentration)) {
          payee = whale();
        } else if (slot == 0 && n_out > 1) {
          payee = spender;  // change
        } else {
          payee = some_address();
        }
        tx.outputs.push_back({names_[payee], amounts[slot]});
        pool_.push_back({payee, amounts[slot]});
      }
      block_fees += fee;
      txs.push_back(std::move(tx));
    }

    Transaction& coinbase = txs[coinbase_pos];
    coinbase.txid = fmt::format("cb-{:08d}", height);
    coinbase.block_height = height;
    coinbase.timestamp = time;
    const std::uint32_t miner = some_address();
    coinbase.outputs.push_back({names_[miner], config_.subsidy + block_fees});
    // Coinbase outputs become spendable from the next block on.
    pool_.push_back({miner, config_.subsidy + block_fees});
  }

  const SyntheticChainConfig& config_;
  Rng rng_;
  std::vector<std::string> names_;
  std::vector<std::uint32_t> ordinary_;
  std::vector<Utxo> pool_;
};

}  // namespace

std::string whale_address(std::uint32_t index) { return fmt::format("whale-{:04d}", index); }

void SyntheticChainConfig::validate() const {
  if (blocks == 0) throw ValidationError("synthetic chain needs at least one block");
  if (whale_count == 0) throw ValidationError("whale_count must be positive");
  if (subsidy <= 0) throw ValidationError("subsidy must be positive");
  if (block_interval <= 0) throw ValidationError("block_interval must be positive");
  if (max_fee < 0) throw ValidationError("max_fee must be non-negative");
  if (!(address_growth > 0.0 && address_growth <= 1.0)) throw ValidationError("address_growth must lie in (0,1]");
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(concentration) || (concentration_end && !in_unit(*concentration_end))) {
    throw ValidationError("concentration must lie in [0,1]");
  }
}

double SyntheticChainConfig::concentration_at(std::uint64_t height) const {
  if (!concentration_end || blocks <= 1) return concentration;
  const double t = static_cast<double>(height) / static_cast<double>(blocks - 1);
  return concentration + (*concentration_end - concentration) * t;
}

TransactionLog generate_synthetic_chain(const SyntheticChainConfig& config) {
  config.validate();
  return ChainBuilder(config).build();
}

}  // namespace ledgerscope
