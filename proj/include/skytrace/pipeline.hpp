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

#include <functional>
#include <memory>
#include <string>

#include "skytrace/chain.hpp"
#include "skytrace/rfidsim.hpp"
#include "skytrace/stores.hpp"

namespace skytrace::pipeline {

using rfidsim::InventorySnapshot;

// Canonical snapshot JSON: {"v":1,"takeoff":...,"total_tags":N,"rows":[[seq,
// pct,timestamp,tag_id],...]} with no insignificant whitespace and pct
// rendered with exactly 9 fractional digits recomputed as 100*seq/total.
// Injective over valid snapshots and byte-stable across runs.
Bytes canonical_snapshot_bytes(const InventorySnapshot& snapshot);

// Inverse direction, tolerant of externally produced pct roundings up to
// 1e-6; throws std::invalid_argument beyond that or on shape violations.
InventorySnapshot parse_snapshot(const nlohmann::json& doc);
InventorySnapshot parse_snapshot_bytes(BytesView bytes);

struct ChainUnreachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The anchoring surface the pipeline needs; either the in-process chain or
// the framed-JSON endpoint stands behind it.
class ChainAccess {
 public:
  virtual ~ChainAccess() = default;
  virtual std::string set_data(const std::string& address, const std::string& inventory_data,
                               const std::string& orbit_hash, const std::string& token) = 0;
  virtual std::pair<std::string, std::string> get_data(const std::string& address) = 0;
  virtual chain::Receipt receipt(const std::string& tx_hash) = 0;
};

class LocalChainAccess final : public ChainAccess {
 public:
  LocalChainAccess(chain::Chain& chain, std::function<uint64_t()> now_ms)
      : chain_(chain), now_ms_(std::move(now_ms)) {}

  std::string set_data(const std::string& address, const std::string& inventory_data,
                       const std::string& orbit_hash, const std::string& token) override;
  std::pair<std::string, std::string> get_data(const std::string& address) override;
  chain::Receipt receipt(const std::string& tx_hash) override;

 private:
  chain::Chain& chain_;
  std::function<uint64_t()> now_ms_;
};

// One frame per request against a chain service endpoint (host:port).
class RemoteChainAccess final : public ChainAccess {
 public:
  explicit RemoteChainAccess(std::string endpoint) : endpoint_(std::move(endpoint)) {}

  std::string set_data(const std::string& address, const std::string& inventory_data,
                       const std::string& orbit_hash, const std::string& token) override;
  std::pair<std::string, std::string> get_data(const std::string& address) override;
  chain::Receipt receipt(const std::string& tx_hash) override;

 private:
  nlohmann::json request(const nlohmann::json& doc);
  std::string endpoint_;
};

enum class AnchorMode { full, hash_only };

struct AnchorRecord {
  std::string snapshot_id;  // digest of the canonical bytes
  std::string orbit_hash;   // entry cid returned by the store append
  std::string tx_hash;      // empty while the anchor is still pending
  uint64_t anchored_at_ms = 0;
  std::string contract;
  AnchorMode mode = AnchorMode::full;
  bool pending_anchor = false;

  nlohmann::json to_json() const;
  static AnchorRecord from_json(const nlohmann::json& doc);
};

// AuthError that still carries the durable store-side half of the record.
struct AuthErrorAfterAppend : chain::AuthError {
  AuthErrorAfterAppend(const std::string& what, AnchorRecord partial)
      : chain::AuthError(what), partial(std::move(partial)) {}
  AnchorRecord partial;
};

enum class VerifyStatus { Verified, Mismatch, MissingAnchor, Pending };

std::string verify_status_name(VerifyStatus status);

struct VerificationReport {
  VerifyStatus status = VerifyStatus::Pending;
  std::string db_data_digest;
  std::string chain_data_digest;
  std::string orbit_hash_db;
  std::string orbit_hash_chain;
  std::string details;

  nlohmann::json to_json() const;
};

// Append-then-anchor (at-least-once): the store append is durable before the
// chain call, and a chain failure yields a pending-anchor record for retry.
AnchorRecord insert_inventory(const InventorySnapshot& snapshot, stores::Store& store,
                              ChainAccess& chain, const std::string& contract,
                              const std::string& token, uint64_t now_ms,
                              AnchorMode mode = AnchorMode::full);

// Read-only; every outcome is a status, never an exception.
VerificationReport verify_inventory(const AnchorRecord& record, const stores::Store& store,
                                    ChainAccess& chain);

}  // namespace skytrace::pipeline
