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

#include "skytrace/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "skytrace/net.hpp"
#include "skytrace/sha256.hpp"

namespace skytrace::pipeline {

using nlohmann::json;
using rfidsim::SnapshotRow;

namespace {

std::string quote(const std::string& s) {
  return json(s).dump();
}

std::string pct_9digits(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", value);
  return buf;
}

}  // namespace

Bytes canonical_snapshot_bytes(const InventorySnapshot& snapshot) {
  if (snapshot.total_tags == 0 && !snapshot.rows.empty()) {
    throw std::invalid_argument("rows without tags");
  }
  std::string out = "{\"v\":1,\"takeoff\":" + quote(snapshot.takeoff) +
                    ",\"total_tags\":" + std::to_string(snapshot.total_tags) + ",\"rows\":[";
  uint32_t expect_seq = 1;
  for (const SnapshotRow& row : snapshot.rows) {
    if (row.seq != expect_seq++) throw std::invalid_argument("row seq not consecutive from 1");
    double exact = 100.0 * row.seq / snapshot.total_tags;
    if (std::fabs(row.pct_read - exact) > 1e-6) {
      throw std::invalid_argument("row pct out of tolerance at seq " + std::to_string(row.seq));
    }
    if (row.seq > 1) out.push_back(',');
    out += "[" + std::to_string(row.seq) + "," + pct_9digits(exact) + "," + quote(row.timestamp) +
           "," + quote(row.tag_id) + "]";
  }
  out += "]}";
  return Bytes(out.begin(), out.end());
}

InventorySnapshot parse_snapshot(const json& doc) {
  if (!doc.is_object() || doc.value("v", 0) != 1) {
    throw std::invalid_argument("snapshot must be a v=1 object");
  }
  InventorySnapshot snap;
  snap.takeoff = doc.at("takeoff").get<std::string>();
  snap.total_tags = doc.at("total_tags").get<uint32_t>();
  rfidsim::parse_clock_ms(snap.takeoff);

  double last_ts = -1.0;
  uint32_t seq = 0;
  std::set<std::string> ids;
  for (const auto& row_doc : doc.at("rows")) {
    if (!row_doc.is_array() || row_doc.size() != 4) {
      throw std::invalid_argument("snapshot row must be [seq,pct,timestamp,tag_id]");
    }
    SnapshotRow row;
    row.seq = row_doc.at(0).get<uint32_t>();
    row.pct_read = row_doc.at(1).get<double>();
    row.timestamp = row_doc.at(2).get<std::string>();
    row.tag_id = row_doc.at(3).get<std::string>();
    if (row.seq != ++seq) throw std::invalid_argument("row seq not consecutive from 1");
    double exact = 100.0 * row.seq / snap.total_tags;
    if (std::fabs(row.pct_read - exact) > 1e-6) {
      throw std::invalid_argument("row pct inconsistent with seq/total at seq " +
                                  std::to_string(row.seq));
    }
    double ts = rfidsim::parse_clock_ms(row.timestamp);
    if (last_ts >= 0 && ts < last_ts) {
      throw std::invalid_argument("row timestamps must be non-decreasing");
    }
    last_ts = ts;
    if (!ids.insert(row.tag_id).second) {
      throw std::invalid_argument("duplicate tag id in snapshot: " + row.tag_id);
    }
    snap.rows.push_back(std::move(row));
  }
  if (snap.rows.size() > snap.total_tags) {
    throw std::invalid_argument("more rows than total_tags");
  }
  return snap;
}

InventorySnapshot parse_snapshot_bytes(BytesView bytes) {
  auto doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded()) throw std::invalid_argument("snapshot is not valid JSON");
  return parse_snapshot(doc);
}

// --- chain access ------------------------------------------------------------

std::string LocalChainAccess::set_data(const std::string& address,
                                       const std::string& inventory_data,
                                       const std::string& orbit_hash, const std::string& token) {
  return chain_.set_data(address, inventory_data, orbit_hash, token, now_ms_());
}

std::pair<std::string, std::string> LocalChainAccess::get_data(const std::string& address) {
  return chain_.get_data(address);
}

chain::Receipt LocalChainAccess::receipt(const std::string& tx_hash) {
  return chain_.tx_receipt(tx_hash);
}

json RemoteChainAccess::request(const json& doc) {
  try {
    net::Socket conn = net::connect_to(endpoint_);
    std::string body = doc.dump();
    conn.write_frame(BytesView(reinterpret_cast<const uint8_t*>(body.data()), body.size()));
    auto reply = conn.read_frame(5000);
    if (!reply) throw ChainUnreachable("chain endpoint closed the connection");
    return json::parse(reply->begin(), reply->end());
  } catch (const net::NetError& e) {
    throw ChainUnreachable(e.what());
  } catch (const json::exception& e) {
    throw ChainUnreachable(std::string("bad chain response: ") + e.what());
  }
}

std::string RemoteChainAccess::set_data(const std::string& address,
                                        const std::string& inventory_data,
                                        const std::string& orbit_hash, const std::string& token) {
  json resp = request({{"type", "SET_DATA"},
                       {"address", address},
                       {"inventory_data", inventory_data},
                       {"orbit_hash", orbit_hash},
                       {"token", token}});
  if (resp.value("ok", false)) return resp.at("tx_hash").get<std::string>();
  std::string error = resp.value("error", "unknown");
  if (error == "AuthError") throw chain::AuthError(resp.value("detail", "token rejected"));
  if (error == "PayloadTooLarge") throw chain::PayloadTooLarge(resp.value("detail", ""));
  if (error == "UnknownContract") throw chain::UnknownContract(address);
  throw ChainUnreachable("chain error: " + error);
}

std::pair<std::string, std::string> RemoteChainAccess::get_data(const std::string& address) {
  json resp = request({{"type", "GET_DATA"}, {"address", address}});
  if (resp.value("ok", false)) {
    return {resp.at("inventory_data").get<std::string>(),
            resp.at("orbit_hash").get<std::string>()};
  }
  if (resp.value("error", "") == "UnknownContract") throw chain::UnknownContract(address);
  throw ChainUnreachable("chain error: " + resp.value("error", "unknown"));
}

chain::Receipt RemoteChainAccess::receipt(const std::string& tx_hash) {
  json resp = request({{"type", "RECEIPT"}, {"tx_hash", tx_hash}});
  if (resp.value("ok", false)) {
    return {resp.at("pending").get<bool>(), resp.at("block_number").get<uint64_t>(),
            resp.at("latency_ms").get<uint64_t>()};
  }
  if (resp.value("error", "") == "UnknownTransaction") throw chain::UnknownTransaction(tx_hash);
  throw ChainUnreachable("chain error: " + resp.value("error", "unknown"));
}

// --- anchor record -------------------------------------------------------------

json AnchorRecord::to_json() const {
  json doc;
  doc["snapshot_id"] = snapshot_id;
  doc["orbit_hash"] = orbit_hash;
  doc["tx_hash"] = tx_hash;
  doc["anchored_at_ms"] = anchored_at_ms;
  doc["contract"] = contract;
  doc["anchor_mode"] = mode == AnchorMode::full ? "full" : "hash_only";
  doc["pending_anchor"] = pending_anchor;
  return doc;
}

AnchorRecord AnchorRecord::from_json(const json& doc) {
  AnchorRecord rec;
  rec.snapshot_id = doc.at("snapshot_id").get<std::string>();
  rec.orbit_hash = doc.at("orbit_hash").get<std::string>();
  rec.tx_hash = doc.value("tx_hash", "");
  rec.anchored_at_ms = doc.value("anchored_at_ms", uint64_t{0});
  rec.contract = doc.value("contract", "");
  rec.mode = doc.value("anchor_mode", "full") == "hash_only" ? AnchorMode::hash_only
                                                             : AnchorMode::full;
  rec.pending_anchor = doc.value("pending_anchor", false);
  return rec;
}

std::string verify_status_name(VerifyStatus status) {
  switch (status) {
    case VerifyStatus::Verified: return "Verified";
    case VerifyStatus::Mismatch: return "Mismatch";
    case VerifyStatus::MissingAnchor: return "MissingAnchor";
    case VerifyStatus::Pending: return "Pending";
  }
  return "?";
}

json VerificationReport::to_json() const {
  json doc;
  doc["status"] = verify_status_name(status);
  doc["db_data_digest"] = db_data_digest;
  doc["chain_data_digest"] = chain_data_digest;
  doc["orbit_hash_db"] = orbit_hash_db;
  doc["orbit_hash_chain"] = orbit_hash_chain;
  doc["details"] = details;
  return doc;
}

// --- insertion -----------------------------------------------------------------

AnchorRecord insert_inventory(const InventorySnapshot& snapshot, stores::Store& store,
                              ChainAccess& chain, const std::string& contract,
                              const std::string& token, uint64_t now_ms, AnchorMode mode) {
  Bytes canonical = canonical_snapshot_bytes(snapshot);
  std::string data(canonical.begin(), canonical.end());

  AnchorRecord rec;
  rec.snapshot_id = to_hex(sha256(data));
  rec.contract = contract;
  rec.mode = mode;
  rec.anchored_at_ms = now_ms;

  // Step 1-2: append to the store; this half stays durable no matter what
  // the chain says next.
  rec.orbit_hash = store.log_add(json(data)).hex();

  std::string chain_payload = mode == AnchorMode::full ? data : rec.snapshot_id;
  try {
    rec.tx_hash = chain.set_data(contract, chain_payload, rec.orbit_hash, token);
  } catch (const chain::AuthError& e) {
    rec.pending_anchor = true;
    throw AuthErrorAfterAppend(e.what(), rec);
  } catch (const ChainUnreachable&) {
    rec.pending_anchor = true;
    return rec;  // at-least-once: caller retries the anchor
  }
  return rec;
}

// --- verification ----------------------------------------------------------------

namespace {

// Pull the snapshot string back out of a stored eventlog entry. Any parse
// failure yields nullopt, which verification reports as a mismatch.
std::optional<std::string> extract_stored_snapshot(const stores::Store& store,
                                                   const std::string& orbit_hash) {
  blockstore::Cid cid;
  try {
    cid = blockstore::Cid::parse(orbit_hash);
  } catch (const EncodingError&) {
    return std::nullopt;
  }
  Bytes wire;
  try {
    wire = store.log()->store()->get(cid);
  } catch (const blockstore::NotFound&) {
    return std::nullopt;
  }
  // A stored copy that no longer hashes to its own name is tampered, whether
  // the flipped byte sits in the snapshot or in the entry envelope.
  if (blockstore::Cid::of(BytesView(wire.data(), wire.size())) != cid) {
    return std::nullopt;
  }
  auto entry_doc = json::parse(wire.begin(), wire.end(), nullptr, false);
  if (entry_doc.is_discarded() || !entry_doc.is_object() || !entry_doc.contains("payload") ||
      !entry_doc["payload"].is_string()) {
    return std::nullopt;
  }
  Bytes payload;
  try {
    payload = base64_decode(entry_doc["payload"].get<std::string>());
  } catch (const EncodingError&) {
    return std::nullopt;
  }
  auto op_doc = json::parse(payload.begin(), payload.end(), nullptr, false);
  if (op_doc.is_discarded() || !op_doc.is_object() || !op_doc.contains("value") ||
      !op_doc["value"].is_string()) {
    return std::nullopt;
  }
  return op_doc["value"].get<std::string>();
}

// Human-oriented diff: names the first differing row when both sides parse,
// otherwise the first differing byte.
std::string describe_diff(const std::string& db, const std::string& on_chain) {
  auto db_doc = json::parse(db, nullptr, false);
  auto chain_doc = json::parse(on_chain, nullptr, false);
  if (!db_doc.is_discarded() && !chain_doc.is_discarded() && db_doc.contains("rows") &&
      chain_doc.contains("rows") && db_doc["rows"].is_array() && chain_doc["rows"].is_array()) {
    const auto& a = db_doc["rows"];
    const auto& b = chain_doc["rows"];
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      if (a.at(i) != b.at(i)) {
        return "row " + std::to_string(i + 1) + " differs: store " + a.at(i).dump() +
               " vs chain " + b.at(i).dump();
      }
    }
    if (a.size() != b.size()) {
      return "row count differs: store " + std::to_string(a.size()) + " vs chain " +
             std::to_string(b.size());
    }
  }
  size_t limit = std::min(db.size(), on_chain.size());
  for (size_t i = 0; i < limit; ++i) {
    if (db[i] != on_chain[i]) {
      return "first differing byte at offset " + std::to_string(i);
    }
  }
  return "lengths differ: store " + std::to_string(db.size()) + " vs chain " +
         std::to_string(on_chain.size());
}

}  // namespace

VerificationReport verify_inventory(const AnchorRecord& record, const stores::Store& store,
                                    ChainAccess& chain) {
  VerificationReport report;
  report.orbit_hash_db = record.orbit_hash;

  std::optional<std::string> db_data = extract_stored_snapshot(store, record.orbit_hash);
  if (db_data) report.db_data_digest = to_hex(sha256(*db_data));

  if (record.tx_hash.empty()) {
    report.status = VerifyStatus::MissingAnchor;
    report.details = "no anchoring transaction was ever submitted";
    return report;
  }

  chain::Receipt receipt;
  try {
    receipt = chain.receipt(record.tx_hash);
  } catch (const chain::UnknownTransaction&) {
    report.status = VerifyStatus::MissingAnchor;
    report.details = "anchoring transaction unknown to the chain";
    return report;
  } catch (const ChainUnreachable& e) {
    report.status = VerifyStatus::Pending;
    report.details = std::string("chain unreachable: ") + e.what();
    return report;
  }
  if (receipt.pending) {
    report.status = VerifyStatus::Pending;
    report.details = "anchoring transaction not yet mined";
    return report;
  }

  std::string chain_data, chain_hash;
  try {
    std::tie(chain_data, chain_hash) = chain.get_data(record.contract);
  } catch (const chain::UnknownContract&) {
    report.status = VerifyStatus::MissingAnchor;
    report.details = "contract unknown to the chain";
    return report;
  } catch (const ChainUnreachable& e) {
    report.status = VerifyStatus::Pending;
    report.details = std::string("chain unreachable: ") + e.what();
    return report;
  }
  report.orbit_hash_chain = chain_hash;
  report.chain_data_digest =
      record.mode == AnchorMode::full ? to_hex(sha256(chain_data)) : chain_data;

  if (!db_data) {
    report.status = VerifyStatus::Mismatch;
    report.details = "stored entry missing or unreadable at " + record.orbit_hash;
    return report;
  }

  bool hashes_equal = chain_hash == record.orbit_hash;
  bool data_equal = record.mode == AnchorMode::full ? (*db_data == chain_data)
                                                    : (report.db_data_digest == chain_data);
  if (hashes_equal && data_equal) {
    report.status = VerifyStatus::Verified;
    report.details = "store and chain copies are byte-identical";
  } else {
    report.status = VerifyStatus::Mismatch;
    if (!data_equal && record.mode == AnchorMode::full) {
      report.details = describe_diff(*db_data, chain_data);
    } else if (!data_equal) {
      report.details = "stored digest differs from the anchored digest";
    } else {
      report.details = "store hash differs: chain holds " + chain_hash;
    }
  }
  return report;
}

}  // namespace skytrace::pipeline
