/*
   Copyright 2026 the skytrace authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skytrace/rng.hpp"
#include "skytrace/bytes.hpp"

namespace skytrace::chain {

using nlohmann::json;

struct AuthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PayloadTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownContract : std::runtime_error {
  explicit UnknownContract(const std::string& addr)
      : std::runtime_error("unknown contract: " + addr) {}
};
struct UnknownTransaction : std::runtime_error {
  explicit UnknownTransaction(const std::string& hash)
      : std::runtime_error("unknown transaction: " + hash) {}
};

// Ether amounts as integer 1e-8 units, so fee sums stay exact.
struct Fixed8 {
  int64_t units = 0;

  static Fixed8 parse(const std::string& text);
  std::string str() const;

  auto operator<=>(const Fixed8&) const = default;
};

constexpr int64_t kDefaultFeeE8 = 3521346;  // 0.03521346 per transaction

// PoA mints on a fixed cadence, empty blocks included. PoW is modeled as a
// per-transaction confirmation latency drawn at submission; blocks carry the
// transactions whose time has arrived and empty blocks are suppressed.
struct MintPolicy {
  enum class Kind { PoA, PoW };
  enum class PowShape { lognormal, uniform };

  Kind kind = Kind::PoA;
  uint64_t poa_interval_ms = 15000;

  PowShape pow_shape = PowShape::lognormal;
  double pow_lo_ms = 2000.0;
  double pow_hi_ms = 80000.0;
  double pow_median_ms = 20000.0;
  double pow_log_sigma = 1.0;

  static MintPolicy poa(uint64_t interval_ms = 15000);
  static MintPolicy pow_default();
  static MintPolicy pow_uniform(double lo_ms, double hi_ms);

  static MintPolicy from_json(const json& doc);
  json to_json() const;

  double sample_confirm_ms(Rng& rng) const;  // clipped into [lo, hi]
};

struct Transaction {
  std::string tx_hash;
  std::string from;
  std::string to;
  std::string fn;                 // "deploy" | "setData"
  std::vector<std::string> args;  // setData: [inventory_data, orbit_hash]
  Fixed8 fee;
  uint64_t submitted_at_ms = 0;
  uint64_t nonce = 0;
  uint64_t confirm_at_ms = 0;  // PoW only

  std::string compute_hash() const;
  json to_json() const;
  static Transaction from_json(const json& doc);
};

struct ChainBlock {
  uint64_t number = 0;
  std::string parent_hash;
  uint64_t timestamp_ms = 0;
  std::vector<Transaction> txs;
  std::string block_hash;

  std::string compute_hash() const;
  json to_json() const;
  static ChainBlock from_json(const json& doc);
};

struct ContractState {
  std::string address;
  std::string inventory_data;
  std::string orbit_hash;
  uint64_t last_update_block = 0;
};

struct Receipt {
  bool pending = true;
  uint64_t block_number = 0;
  uint64_t latency_ms = 0;
};

struct ChainConfig {
  MintPolicy policy;
  std::string auth_token = "secret";
  Fixed8 fee{kDefaultFeeE8};
  size_t calldata_cap = 128 * 1024;
  uint64_t seed = 0;

  static ChainConfig from_json(const json& doc);
  json to_json() const;
};

// One serialized state machine: a single unforked block chain plus a pending
// pool. All mutations happen under one lock; reads are consistent snapshots.
class Chain {
 public:
  explicit Chain(ChainConfig config);

  std::string deploy_contract(const std::string& deployer, uint64_t now_ms);

  // Validates the token, then enqueues; the pool and contract state are
  // untouched on AuthError. Returns the tx hash immediately.
  std::string set_data(const std::string& address, const std::string& inventory_data,
                       const std::string& orbit_hash, const std::string& token,
                       uint64_t now_ms);

  std::pair<std::string, std::string> get_data(const std::string& address) const;

  std::vector<ChainBlock> mint_step(uint64_t now_ms);

  Receipt tx_receipt(const std::string& tx_hash) const;

  uint64_t height() const;
  std::string head_hash() const;
  size_t pending_count() const;
  Fixed8 total_fees() const;
  std::vector<ChainBlock> blocks() const;
  std::vector<std::string> contract_addresses() const;

  const ChainConfig& config() const { return config_; }

  // Append-only block file plus a pending/contract snapshot under `dir`.
  void persist_to(const std::filesystem::path& dir);
  static std::unique_ptr<Chain> load(const std::filesystem::path& dir, ChainConfig config);

  // Recomputes every contract state and block hash from genesis; throws
  // std::runtime_error on any divergence from the live state.
  void replay_verify() const;

 private:
  void mine_block_locked(uint64_t timestamp_ms, std::vector<Transaction> txs);
  void apply_tx_locked(const Transaction& tx, uint64_t block_number);
  void append_block_file(const ChainBlock& block) const;
  void write_snapshot_locked() const;
  uint64_t pow_confirm_delay(uint64_t nonce) const;

  ChainConfig config_;
  mutable std::mutex mu_;
  std::vector<ChainBlock> blocks_;
  std::deque<Transaction> pending_;
  std::map<std::string, ContractState> contracts_;
  std::map<std::string, std::pair<uint64_t, uint64_t>> mined_;  // hash -> (block, latency)
  std::map<std::string, uint64_t> submitted_;                   // hash -> submitted_at
  uint64_t next_nonce_ = 0;
  Fixed8 total_fees_{0};
  std::optional<std::filesystem::path> persist_dir_;
};

// Request/response handler for the framed-JSON chain endpoint
// (SET_DATA, GET_DATA, RECEIPT, STATUS).
json handle_request(Chain& chain, const json& request, uint64_t now_ms);

}  // namespace skytrace::chain
