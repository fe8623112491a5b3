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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skytrace/oplog.hpp"

namespace skytrace::stores {

using blockstore::Cid;
using nlohmann::json;

enum class StoreKind { eventlog, feed, keyvalue, docs, counter };

std::string kind_name(StoreKind kind);
StoreKind kind_from_name(const std::string& name);  // throws std::invalid_argument

enum class OpTag { ADD, REMOVE, PUT, DEL, INC };

// One store operation, carried as an entry payload in canonical JSON with
// fixed key order (op, key, value; absent fields omitted).
struct OpPayload {
  OpTag op;
  std::optional<std::string> key;
  std::optional<json> value;

  Bytes canonical() const;
  static OpPayload parse(BytesView bytes);  // throws MalformedOperation
};

struct MalformedOperation : std::runtime_error {
  MalformedOperation(const Cid& entry_cid, const std::string& what)
      : std::runtime_error("malformed operation in entry " + entry_cid.hex() + ": " + what),
        entry_cid(entry_cid) {}
  explicit MalformedOperation(const std::string& what) : std::runtime_error(what) {}
  Cid entry_cid;
};
struct KindMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EventRecord {
  Cid entry_cid;
  json value;

  bool operator==(const EventRecord&) const = default;
};

// Deterministic fold of the log traversal, per kind. Key/document conflicts
// resolve last-writer-wins in traversal order; feed removals tombstone the
// target ADD entry by cid; the counter is a grow-only sum.
struct MaterializedState {
  StoreKind kind = StoreKind::eventlog;
  std::vector<EventRecord> events;          // eventlog, feed (tombstones applied)
  std::map<std::string, json> mapping;      // keyvalue, docs
  int64_t counter = 0;                      // counter

  bool operator==(const MaterializedState&) const = default;
};

MaterializedState reduce(StoreKind kind, const oplog::Log& log);
MaterializedState reduce_entries(StoreKind kind, const std::vector<oplog::Entry>& ordered);

// A typed handle over one oplog. Mutators append one operation and return the
// entry cid; readers only ever look at the reduced state.
class Store {
 public:
  Store(StoreKind kind, std::shared_ptr<oplog::Log> log);

  StoreKind kind() const { return kind_; }
  const std::string& address() const { return log_->address(); }
  std::shared_ptr<oplog::Log> log() const { return log_; }

  MaterializedState state() const { return reduce(kind_, *log_); }

  // eventlog
  Cid log_add(const json& value);

  // feed
  Cid feed_add(const json& value);
  Cid feed_remove(const Cid& add_entry_cid);
  std::vector<EventRecord> feed_entries() const;

  // keyvalue
  Cid kv_put(const std::string& key, const json& value);
  Cid kv_del(const std::string& key);
  std::optional<json> kv_get(const std::string& key) const;

  // docs (indexed by the "_id" field)
  Cid doc_put(const json& document);
  Cid doc_del(const std::string& id);
  std::optional<json> doc_get(const std::string& id) const;
  std::vector<json> doc_query(const std::string& id_prefix) const;

  // counter
  Cid counter_inc(int64_t amount);
  int64_t counter_value() const;

 private:
  void require(StoreKind kind, const char* op) const;
  Cid append_op(const OpPayload& op);

  StoreKind kind_;
  std::shared_ptr<oplog::Log> log_;
};

}  // namespace skytrace::stores
