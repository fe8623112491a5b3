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

#include "skytrace/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include "skytrace/sha256.hpp"

namespace skytrace::chain {

using nlohmann::ordered_json;

namespace fs = std::filesystem;

namespace {

constexpr char kZeroHash[] = "0000000000000000000000000000000000000000000000000000000000000000";

uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::string sha_hex(const std::string& s) {
  return to_hex(sha256(s));
}

}  // namespace

Fixed8 Fixed8::parse(const std::string& text) {
  auto dot = text.find('.');
  std::string whole = dot == std::string::npos ? text : text.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
  if (frac.size() > 8) throw std::invalid_argument("more than 8 fractional digits: " + text);
  frac.resize(8, '0');
  bool negative = !whole.empty() && whole[0] == '-';
  if (negative) whole = whole.substr(1);
  int64_t units = std::stoll(whole.empty() ? "0" : whole) * 100000000LL + std::stoll(frac);
  return Fixed8{negative ? -units : units};
}

std::string Fixed8::str() const {
  int64_t u = units < 0 ? -units : units;
  std::string frac = std::to_string(u % 100000000LL);
  frac.insert(0, 8 - frac.size(), '0');
  return (units < 0 ? "-" : "") + std::to_string(u / 100000000LL) + "." + frac;
}

MintPolicy MintPolicy::poa(uint64_t interval_ms) {
  if (interval_ms == 0) throw std::invalid_argument("PoA interval must be positive");
  MintPolicy p;
  p.kind = Kind::PoA;
  p.poa_interval_ms = interval_ms;
  return p;
}

MintPolicy MintPolicy::pow_default() {
  MintPolicy p;
  p.kind = Kind::PoW;
  return p;
}

MintPolicy MintPolicy::pow_uniform(double lo_ms, double hi_ms) {
  MintPolicy p;
  p.kind = Kind::PoW;
  p.pow_shape = PowShape::uniform;
  p.pow_lo_ms = lo_ms;
  p.pow_hi_ms = hi_ms;
  return p;
}

MintPolicy MintPolicy::from_json(const json& doc) {
  std::string kind = doc.value("kind", "poa");
  if (kind == "poa") {
    return poa(doc.value("interval_ms", uint64_t{15000}));
  }
  if (kind == "pow") {
    MintPolicy p = pow_default();
    std::string shape = doc.value("shape", "lognormal");
    p.pow_shape = shape == "uniform" ? PowShape::uniform : PowShape::lognormal;
    p.pow_lo_ms = doc.value("lo_ms", 2000.0);
    p.pow_hi_ms = doc.value("hi_ms", 80000.0);
    p.pow_median_ms = doc.value("median_ms", 20000.0);
    p.pow_log_sigma = doc.value("log_sigma", 1.0);
    if (!(p.pow_lo_ms > 0.0) || !(p.pow_lo_ms < p.pow_hi_ms)) {
      throw std::invalid_argument("PoW support bounds need 0 < lo < hi");
    }
    return p;
  }
  throw std::invalid_argument("unknown mint policy: " + kind);
}

json MintPolicy::to_json() const {
  json doc;
  if (kind == Kind::PoA) {
    doc["kind"] = "poa";
    doc["interval_ms"] = poa_interval_ms;
  } else {
    doc["kind"] = "pow";
    doc["shape"] = pow_shape == PowShape::uniform ? "uniform" : "lognormal";
    doc["lo_ms"] = pow_lo_ms;
    doc["hi_ms"] = pow_hi_ms;
    doc["median_ms"] = pow_median_ms;
    doc["log_sigma"] = pow_log_sigma;
  }
  return doc;
}

double MintPolicy::sample_confirm_ms(Rng& rng) const {
  double draw;
  if (pow_shape == PowShape::uniform) {
    draw = rng.uniform(pow_lo_ms, pow_hi_ms);
  } else {
    draw = rng.lognormal(std::log(pow_median_ms), pow_log_sigma);
  }
  return std::clamp(draw, pow_lo_ms, pow_hi_ms);
}

// --- transactions and blocks ------------------------------------------------

std::string Transaction::compute_hash() const {
  ordered_json doc;
  doc["from"] = from;
  doc["to"] = to;
  doc["fn"] = fn;
  doc["args"] = args;
  doc["fee"] = fee.str();
  doc["submitted_at_ms"] = submitted_at_ms;
  doc["nonce"] = nonce;
  return sha_hex(doc.dump());
}

json Transaction::to_json() const {
  json doc;
  doc["tx_hash"] = tx_hash;
  doc["from"] = from;
  doc["to"] = to;
  doc["fn"] = fn;
  doc["args"] = args;
  doc["fee"] = fee.str();
  doc["submitted_at_ms"] = submitted_at_ms;
  doc["nonce"] = nonce;
  doc["confirm_at_ms"] = confirm_at_ms;
  return doc;
}

Transaction Transaction::from_json(const json& doc) {
  Transaction tx;
  tx.tx_hash = doc.at("tx_hash").get<std::string>();
  tx.from = doc.at("from").get<std::string>();
  tx.to = doc.at("to").get<std::string>();
  tx.fn = doc.at("fn").get<std::string>();
  tx.args = doc.at("args").get<std::vector<std::string>>();
  tx.fee = Fixed8::parse(doc.at("fee").get<std::string>());
  tx.submitted_at_ms = doc.at("submitted_at_ms").get<uint64_t>();
  tx.nonce = doc.at("nonce").get<uint64_t>();
  tx.confirm_at_ms = doc.value("confirm_at_ms", uint64_t{0});
  return tx;
}

std::string ChainBlock::compute_hash() const {
  ordered_json doc;
  doc["number"] = number;
  doc["parent"] = parent_hash;
  doc["timestamp_ms"] = timestamp_ms;
  ordered_json hashes = ordered_json::array();
  for (const Transaction& tx : txs) hashes.push_back(tx.tx_hash);
  doc["txs"] = std::move(hashes);
  return sha_hex(doc.dump());
}

json ChainBlock::to_json() const {
  json doc;
  doc["number"] = number;
  doc["parent"] = parent_hash;
  doc["timestamp_ms"] = timestamp_ms;
  json txs_doc = json::array();
  for (const Transaction& tx : txs) txs_doc.push_back(tx.to_json());
  doc["txs"] = std::move(txs_doc);
  doc["block_hash"] = block_hash;
  return doc;
}

ChainBlock ChainBlock::from_json(const json& doc) {
  ChainBlock b;
  b.number = doc.at("number").get<uint64_t>();
  b.parent_hash = doc.at("parent").get<std::string>();
  b.timestamp_ms = doc.at("timestamp_ms").get<uint64_t>();
  for (const auto& tx : doc.at("txs")) b.txs.push_back(Transaction::from_json(tx));
  b.block_hash = doc.at("block_hash").get<std::string>();
  return b;
}

ChainConfig ChainConfig::from_json(const json& doc) {
  ChainConfig cfg;
  if (doc.contains("mint")) cfg.policy = MintPolicy::from_json(doc.at("mint"));
  cfg.auth_token = doc.value("token", cfg.auth_token);
  if (doc.contains("fee")) cfg.fee = Fixed8::parse(doc.at("fee").get<std::string>());
  cfg.calldata_cap = doc.value("calldata_cap", cfg.calldata_cap);
  cfg.seed = doc.value("seed", cfg.seed);
  return cfg;
}

json ChainConfig::to_json() const {
  json doc;
  doc["mint"] = policy.to_json();
  doc["token"] = auth_token;
  doc["fee"] = fee.str();
  doc["calldata_cap"] = calldata_cap;
  doc["seed"] = seed;
  return doc;
}

// --- chain ------------------------------------------------------------------

Chain::Chain(ChainConfig config) : config_(std::move(config)) {
  ChainBlock genesis;
  genesis.number = 0;
  genesis.parent_hash = kZeroHash;
  genesis.timestamp_ms = 0;
  genesis.block_hash = genesis.compute_hash();
  blocks_.push_back(std::move(genesis));
}

uint64_t Chain::pow_confirm_delay(uint64_t nonce) const {
  Rng rng(mix64(config_.seed, nonce));
  return static_cast<uint64_t>(std::llround(config_.policy.sample_confirm_ms(rng)));
}

std::string Chain::deploy_contract(const std::string& deployer, uint64_t now_ms) {
  std::lock_guard lock(mu_);
  Transaction tx;
  tx.from = deployer;
  tx.fn = "deploy";
  tx.fee = config_.fee;
  tx.submitted_at_ms = now_ms;
  tx.nonce = next_nonce_++;

  ordered_json addr_doc;
  addr_doc["deployer"] = deployer;
  addr_doc["nonce"] = tx.nonce;
  std::string address = "0x" + sha_hex(addr_doc.dump()).substr(0, 40);
  tx.to = address;
  tx.args = {address};
  if (config_.policy.kind == MintPolicy::Kind::PoW) {
    tx.confirm_at_ms = now_ms + pow_confirm_delay(tx.nonce);
  }
  tx.tx_hash = tx.compute_hash();

  contracts_.emplace(address, ContractState{address, "", "", 0});
  submitted_[tx.tx_hash] = now_ms;
  pending_.push_back(std::move(tx));
  write_snapshot_locked();
  return address;
}

std::string Chain::set_data(const std::string& address, const std::string& inventory_data,
                            const std::string& orbit_hash, const std::string& token,
                            uint64_t now_ms) {
  std::lock_guard lock(mu_);
  if (token != config_.auth_token) throw AuthError("authentication token rejected");
  if (!contracts_.contains(address)) throw UnknownContract(address);
  if (inventory_data.size() + orbit_hash.size() > config_.calldata_cap) {
    throw PayloadTooLarge("calldata of " + std::to_string(inventory_data.size()) +
                          " bytes exceeds cap " + std::to_string(config_.calldata_cap));
  }
  Transaction tx;
  tx.from = "0x" + sha_hex("ground-station").substr(0, 40);
  tx.to = address;
  tx.fn = "setData";
  tx.args = {inventory_data, orbit_hash};
  tx.fee = config_.fee;
  tx.submitted_at_ms = now_ms;
  tx.nonce = next_nonce_++;
  if (config_.policy.kind == MintPolicy::Kind::PoW) {
    tx.confirm_at_ms = now_ms + pow_confirm_delay(tx.nonce);
  }
  tx.tx_hash = tx.compute_hash();
  submitted_[tx.tx_hash] = now_ms;
  pending_.push_back(tx);
  write_snapshot_locked();
  return tx.tx_hash;
}

std::pair<std::string, std::string> Chain::get_data(const std::string& address) const {
  std::lock_guard lock(mu_);
  auto it = contracts_.find(address);
  if (it == contracts_.end()) throw UnknownContract(address);
  return {it->second.inventory_data, it->second.orbit_hash};
}

void Chain::apply_tx_locked(const Transaction& tx, uint64_t block_number) {
  total_fees_.units += tx.fee.units;
  if (tx.fn == "setData") {
    auto it = contracts_.find(tx.to);
    if (it != contracts_.end()) {
      it->second.inventory_data = tx.args.at(0);
      it->second.orbit_hash = tx.args.at(1);
      it->second.last_update_block = block_number;
    }
  }
}

void Chain::mine_block_locked(uint64_t timestamp_ms, std::vector<Transaction> txs) {
  ChainBlock block;
  block.number = blocks_.back().number + 1;
  block.parent_hash = blocks_.back().block_hash;
  block.timestamp_ms = std::max(timestamp_ms, blocks_.back().timestamp_ms);
  block.txs = std::move(txs);
  block.block_hash = block.compute_hash();
  for (const Transaction& tx : block.txs) {
    mined_[tx.tx_hash] = {block.number, block.timestamp_ms - tx.submitted_at_ms};
    apply_tx_locked(tx, block.number);
  }
  blocks_.push_back(block);
  append_block_file(blocks_.back());
}

std::vector<ChainBlock> Chain::mint_step(uint64_t now_ms) {
  std::lock_guard lock(mu_);
  size_t before = blocks_.size();

  if (config_.policy.kind == MintPolicy::Kind::PoA) {
    uint64_t interval = config_.policy.poa_interval_ms;
    uint64_t next_time = (blocks_.back().number + 1) * interval;
    while (next_time <= now_ms) {
      std::vector<Transaction> included;
      auto it = pending_.begin();
      while (it != pending_.end()) {
        if (it->submitted_at_ms <= next_time) {
          included.push_back(*it);
          it = pending_.erase(it);
        } else {
          ++it;
        }
      }
      mine_block_locked(next_time, std::move(included));
      next_time += interval;
    }
  } else {
    // One block per distinct arrival time keeps each latency exact.
    std::vector<Transaction> due;
    auto it = pending_.begin();
    while (it != pending_.end()) {
      if (it->confirm_at_ms <= now_ms) {
        due.push_back(*it);
        it = pending_.erase(it);
      } else {
        ++it;
      }
    }
    std::stable_sort(due.begin(), due.end(), [](const Transaction& a, const Transaction& b) {
      return a.confirm_at_ms != b.confirm_at_ms ? a.confirm_at_ms < b.confirm_at_ms
                                                : a.nonce < b.nonce;
    });
    size_t i = 0;
    while (i < due.size()) {
      size_t j = i;
      while (j < due.size() && due[j].confirm_at_ms == due[i].confirm_at_ms) ++j;
      mine_block_locked(due[i].confirm_at_ms,
                        std::vector<Transaction>(due.begin() + i, due.begin() + j));
      i = j;
    }
  }

  std::vector<ChainBlock> minted(blocks_.begin() + before, blocks_.end());
  if (!minted.empty()) write_snapshot_locked();
  return minted;
}

Receipt Chain::tx_receipt(const std::string& tx_hash) const {
  std::lock_guard lock(mu_);
  auto it = mined_.find(tx_hash);
  if (it != mined_.end()) return Receipt{false, it->second.first, it->second.second};
  if (submitted_.contains(tx_hash)) return Receipt{true, 0, 0};
  throw UnknownTransaction(tx_hash);
}

uint64_t Chain::height() const {
  std::lock_guard lock(mu_);
  return blocks_.back().number;
}

std::string Chain::head_hash() const {
  std::lock_guard lock(mu_);
  return blocks_.back().block_hash;
}

size_t Chain::pending_count() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

Fixed8 Chain::total_fees() const {
  std::lock_guard lock(mu_);
  return total_fees_;
}

std::vector<ChainBlock> Chain::blocks() const {
  std::lock_guard lock(mu_);
  return blocks_;
}

std::vector<std::string> Chain::contract_addresses() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [addr, _] : contracts_) out.push_back(addr);
  return out;
}

// --- persistence -------------------------------------------------------------

void Chain::persist_to(const fs::path& dir) {
  std::lock_guard lock(mu_);
  persist_dir_ = dir;
  fs::create_directories(dir);
  std::ofstream blocks_file(dir / "blocks.jsonl", std::ios::trunc);
  for (const ChainBlock& b : blocks_) blocks_file << b.to_json().dump() << "\n";
  write_snapshot_locked();
}

void Chain::append_block_file(const ChainBlock& block) const {
  if (!persist_dir_) return;
  std::ofstream out(*persist_dir_ / "blocks.jsonl", std::ios::app);
  out << block.to_json().dump() << "\n";
}

void Chain::write_snapshot_locked() const {
  if (!persist_dir_) return;
  json doc;
  json pending = json::array();
  for (const Transaction& tx : pending_) pending.push_back(tx.to_json());
  doc["pending"] = std::move(pending);
  json contracts = json::object();
  for (const auto& [addr, st] : contracts_) {
    contracts[addr] = {{"inventory_data", st.inventory_data},
                       {"orbit_hash", st.orbit_hash},
                       {"last_update_block", st.last_update_block}};
  }
  doc["contracts"] = std::move(contracts);
  doc["next_nonce"] = next_nonce_;
  fs::path target = *persist_dir_ / "chain_state.json";
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump() << "\n";
  }
  fs::rename(tmp, target);
}

std::unique_ptr<Chain> Chain::load(const fs::path& dir, ChainConfig config) {
  auto chain_ptr = std::make_unique<Chain>(std::move(config));
  Chain& chain = *chain_ptr;
  std::ifstream blocks_file(dir / "blocks.jsonl");
  std::string line;
  bool first = true;
  while (std::getline(blocks_file, line)) {
    if (line.empty()) continue;
    ChainBlock b = ChainBlock::from_json(json::parse(line));
    if (first) {
      first = false;
      continue;  // genesis is reconstructed
    }
    chain.blocks_.push_back(b);
    for (const Transaction& tx : b.txs) {
      chain.submitted_[tx.tx_hash] = tx.submitted_at_ms;
      chain.mined_[tx.tx_hash] = {b.number, b.timestamp_ms - tx.submitted_at_ms};
      if (tx.fn == "deploy") chain.contracts_.emplace(tx.to, ContractState{tx.to, "", "", 0});
      chain.apply_tx_locked(tx, b.number);
    }
  }
  std::ifstream state_file(dir / "chain_state.json");
  if (state_file) {
    json doc = json::parse(state_file, nullptr, false);
    if (!doc.is_discarded()) {
      for (const auto& p : doc.value("pending", json::array())) {
        Transaction tx = Transaction::from_json(p);
        chain.submitted_[tx.tx_hash] = tx.submitted_at_ms;
        if (tx.fn == "deploy" && !chain.contracts_.contains(tx.to)) {
          chain.contracts_.emplace(tx.to, ContractState{tx.to, "", "", 0});
        }
        chain.pending_.push_back(std::move(tx));
      }
      chain.next_nonce_ = doc.value("next_nonce", chain.next_nonce_);
    }
  }
  chain.persist_dir_ = dir;
  chain.replay_verify();
  return chain_ptr;
}

void Chain::replay_verify() const {
  std::lock_guard lock(mu_);
  std::string parent = kZeroHash;
  uint64_t last_ts = 0;
  std::map<std::string, ContractState> replayed;
  Fixed8 fees{0};
  for (const ChainBlock& b : blocks_) {
    if (b.parent_hash != parent) throw std::runtime_error("parent hash mismatch at block " +
                                                          std::to_string(b.number));
    if (b.compute_hash() != b.block_hash) {
      throw std::runtime_error("block hash mismatch at block " + std::to_string(b.number));
    }
    if (b.timestamp_ms < last_ts) throw std::runtime_error("timestamps not monotone");
    last_ts = b.timestamp_ms;
    parent = b.block_hash;
    for (const Transaction& tx : b.txs) {
      if (tx.compute_hash() != tx.tx_hash) {
        throw std::runtime_error("tx hash mismatch: " + tx.tx_hash);
      }
      fees.units += tx.fee.units;
      if (tx.fn == "deploy") replayed.emplace(tx.to, ContractState{tx.to, "", "", 0});
      if (tx.fn == "setData") {
        auto it = replayed.find(tx.to);
        if (it != replayed.end()) {
          it->second.inventory_data = tx.args.at(0);
          it->second.orbit_hash = tx.args.at(1);
          it->second.last_update_block = b.number;
        }
      }
    }
  }
  if (fees.units != total_fees_.units) throw std::runtime_error("fee accounting mismatch");
  for (const auto& [addr, st] : replayed) {
    auto it = contracts_.find(addr);
    if (it == contracts_.end() || it->second.inventory_data != st.inventory_data ||
        it->second.orbit_hash != st.orbit_hash ||
        it->second.last_update_block != st.last_update_block) {
      throw std::runtime_error("replayed contract state diverges: " + addr);
    }
  }
}

// --- framed-JSON endpoint -----------------------------------------------------

json handle_request(Chain& chain, const json& request, uint64_t now_ms) {
  json resp;
  try {
    std::string type = request.at("type").get<std::string>();
    if (type == "SET_DATA") {
      std::string tx_hash =
          chain.set_data(request.at("address").get<std::string>(),
                         request.at("inventory_data").get<std::string>(),
                         request.at("orbit_hash").get<std::string>(),
                         request.at("token").get<std::string>(), now_ms);
      resp["ok"] = true;
      resp["tx_hash"] = tx_hash;
    } else if (type == "GET_DATA") {
      auto [data, hash] = chain.get_data(request.at("address").get<std::string>());
      resp["ok"] = true;
      resp["inventory_data"] = data;
      resp["orbit_hash"] = hash;
    } else if (type == "RECEIPT") {
      Receipt r = chain.tx_receipt(request.at("tx_hash").get<std::string>());
      resp["ok"] = true;
      resp["pending"] = r.pending;
      resp["block_number"] = r.block_number;
      resp["latency_ms"] = r.latency_ms;
    } else if (type == "STATUS") {
      resp["ok"] = true;
      resp["height"] = chain.height();
      resp["head_hash"] = chain.head_hash();
      resp["pending"] = chain.pending_count();
      resp["total_fees"] = chain.total_fees().str();
      resp["contracts"] = chain.contract_addresses();
    } else {
      resp["ok"] = false;
      resp["error"] = "BadRequest";
      resp["detail"] = "unknown request type: " + type;
    }
  } catch (const AuthError& e) {
    resp = {{"ok", false}, {"error", "AuthError"}, {"detail", e.what()}};
  } catch (const PayloadTooLarge& e) {
    resp = {{"ok", false}, {"error", "PayloadTooLarge"}, {"detail", e.what()}};
  } catch (const UnknownContract& e) {
    resp = {{"ok", false}, {"error", "UnknownContract"}, {"detail", e.what()}};
  } catch (const UnknownTransaction& e) {
    resp = {{"ok", false}, {"error", "UnknownTransaction"}, {"detail", e.what()}};
  } catch (const json::exception& e) {
    resp = {{"ok", false}, {"error", "BadRequest"}, {"detail", e.what()}};
  }
  return resp;
}

}  // namespace skytrace::chain
