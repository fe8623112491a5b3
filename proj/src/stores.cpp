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

#include "skytrace/stores.hpp"

#include <algorithm>
#include <set>

namespace skytrace::stores {

using nlohmann::ordered_json;

std::string kind_name(StoreKind kind) {
  switch (kind) {
    case StoreKind::eventlog: return "eventlog";
    case StoreKind::feed: return "feed";
    case StoreKind::keyvalue: return "keyvalue";
    case StoreKind::docs: return "docs";
    case StoreKind::counter: return "counter";
  }
  return "unknown";
}

StoreKind kind_from_name(const std::string& name) {
  if (name == "eventlog") return StoreKind::eventlog;
  if (name == "feed") return StoreKind::feed;
  if (name == "keyvalue") return StoreKind::keyvalue;
  if (name == "docs") return StoreKind::docs;
  if (name == "counter") return StoreKind::counter;
  throw std::invalid_argument("unknown store kind: " + name);
}

namespace {

const char* tag_name(OpTag tag) {
  switch (tag) {
    case OpTag::ADD: return "ADD";
    case OpTag::REMOVE: return "REMOVE";
    case OpTag::PUT: return "PUT";
    case OpTag::DEL: return "DEL";
    case OpTag::INC: return "INC";
  }
  return "?";
}

std::optional<OpTag> tag_from_name(const std::string& name) {
  if (name == "ADD") return OpTag::ADD;
  if (name == "REMOVE") return OpTag::REMOVE;
  if (name == "PUT") return OpTag::PUT;
  if (name == "DEL") return OpTag::DEL;
  if (name == "INC") return OpTag::INC;
  return std::nullopt;
}

}  // namespace

Bytes OpPayload::canonical() const {
  ordered_json doc;
  doc["op"] = tag_name(op);
  if (key) doc["key"] = *key;
  if (value) doc["value"] = *value;
  std::string s = doc.dump();
  return Bytes(s.begin(), s.end());
}

OpPayload OpPayload::parse(BytesView bytes) {
  auto doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw MalformedOperation("operation payload is not a JSON object");
  }
  if (!doc.contains("op") || !doc["op"].is_string()) {
    throw MalformedOperation("operation payload has no op tag");
  }
  auto tag = tag_from_name(doc["op"].get<std::string>());
  if (!tag) throw MalformedOperation("unknown op tag: " + doc["op"].get<std::string>());
  OpPayload op;
  op.op = *tag;
  if (doc.contains("key")) {
    if (!doc["key"].is_string()) throw MalformedOperation("key is not a string");
    op.key = doc["key"].get<std::string>();
  }
  if (doc.contains("value")) op.value = doc["value"];
  for (const auto& [k, _] : doc.items()) {
    if (k != "op" && k != "key" && k != "value") {
      throw MalformedOperation("unknown operation field: " + k);
    }
  }
  return op;
}

namespace {

// Per-kind legality of one parsed operation; throws naming the entry.
void check_legal(StoreKind kind, const OpPayload& op, const Cid& cid) {
  auto fail = [&](const std::string& what) { throw MalformedOperation(cid, what); };
  switch (kind) {
    case StoreKind::eventlog:
      if (op.op != OpTag::ADD) fail("eventlog accepts ADD only");
      if (!op.value) fail("ADD needs a value");
      break;
    case StoreKind::feed:
      if (op.op == OpTag::ADD) {
        if (!op.value) fail("ADD needs a value");
      } else if (op.op == OpTag::REMOVE) {
        if (!op.key) fail("REMOVE needs the target entry cid");
      } else {
        fail("feed accepts ADD and REMOVE only");
      }
      break;
    case StoreKind::keyvalue:
      if (op.op == OpTag::PUT) {
        if (!op.key || !op.value) fail("PUT needs key and value");
      } else if (op.op == OpTag::DEL) {
        if (!op.key) fail("DEL needs a key");
      } else {
        fail("keyvalue accepts PUT and DEL only");
      }
      break;
    case StoreKind::docs:
      if (op.op == OpTag::PUT) {
        if (!op.key || !op.value) fail("PUT needs key and value");
        if (!op.value->is_object() || !op.value->contains("_id") ||
            !(*op.value)["_id"].is_string() || (*op.value)["_id"].get<std::string>() != *op.key) {
          fail("document must carry an _id matching the index key");
        }
      } else if (op.op == OpTag::DEL) {
        if (!op.key) fail("DEL needs a key");
      } else {
        fail("docs accepts PUT and DEL only");
      }
      break;
    case StoreKind::counter:
      if (op.op != OpTag::INC) fail("counter accepts INC only");
      if (!op.value || !op.value->is_number_integer() || op.value->get<int64_t>() <= 0) {
        fail("INC needs a positive integer amount");
      }
      break;
  }
}

}  // namespace

MaterializedState reduce_entries(StoreKind kind, const std::vector<oplog::Entry>& ordered) {
  MaterializedState state;
  state.kind = kind;
  std::set<std::string> removed;  // feed tombstones, by target cid hex
  std::vector<EventRecord> adds;

  for (const oplog::Entry& e : ordered) {
    OpPayload op;
    try {
      op = OpPayload::parse(BytesView(e.payload.data(), e.payload.size()));
    } catch (const MalformedOperation& err) {
      throw MalformedOperation(e.cid, err.what());
    }
    check_legal(kind, op, e.cid);
    switch (kind) {
      case StoreKind::eventlog:
        state.events.push_back({e.cid, *op.value});
        break;
      case StoreKind::feed:
        if (op.op == OpTag::ADD) {
          adds.push_back({e.cid, *op.value});
        } else {
          removed.insert(*op.key);
        }
        break;
      case StoreKind::keyvalue:
      case StoreKind::docs:
        if (op.op == OpTag::PUT) {
          state.mapping[*op.key] = *op.value;
        } else {
          state.mapping.erase(*op.key);
        }
        break;
      case StoreKind::counter:
        state.counter += op.value->get<int64_t>();
        break;
    }
  }
  if (kind == StoreKind::feed) {
    for (auto& rec : adds) {
      if (!removed.contains(rec.entry_cid.hex())) state.events.push_back(std::move(rec));
    }
  }
  return state;
}

MaterializedState reduce(StoreKind kind, const oplog::Log& log) {
  return reduce_entries(kind, log.traverse());
}

Store::Store(StoreKind kind, std::shared_ptr<oplog::Log> log)
    : kind_(kind), log_(std::move(log)) {}

void Store::require(StoreKind kind, const char* op) const {
  if (kind_ != kind) {
    throw KindMismatch(std::string(op) + " requires a " + kind_name(kind) + " store, this is " +
                       kind_name(kind_));
  }
}

Cid Store::append_op(const OpPayload& op) {
  Bytes payload = op.canonical();
  return log_->append(BytesView(payload.data(), payload.size())).cid;
}

Cid Store::log_add(const json& value) {
  require(StoreKind::eventlog, "log_add");
  return append_op({OpTag::ADD, std::nullopt, value});
}

Cid Store::feed_add(const json& value) {
  require(StoreKind::feed, "feed_add");
  return append_op({OpTag::ADD, std::nullopt, value});
}

Cid Store::feed_remove(const Cid& add_entry_cid) {
  require(StoreKind::feed, "feed_remove");
  return append_op({OpTag::REMOVE, add_entry_cid.hex(), std::nullopt});
}

std::vector<EventRecord> Store::feed_entries() const {
  require(StoreKind::feed, "feed_entries");
  return state().events;
}

Cid Store::kv_put(const std::string& key, const json& value) {
  require(StoreKind::keyvalue, "kv_put");
  return append_op({OpTag::PUT, key, value});
}

Cid Store::kv_del(const std::string& key) {
  require(StoreKind::keyvalue, "kv_del");
  return append_op({OpTag::DEL, key, std::nullopt});
}

std::optional<json> Store::kv_get(const std::string& key) const {
  require(StoreKind::keyvalue, "kv_get");
  MaterializedState s = state();
  auto it = s.mapping.find(key);
  if (it == s.mapping.end()) return std::nullopt;
  return it->second;
}

Cid Store::doc_put(const json& document) {
  require(StoreKind::docs, "doc_put");
  if (!document.is_object() || !document.contains("_id") || !document["_id"].is_string()) {
    throw MalformedOperation("document needs a string _id field");
  }
  return append_op({OpTag::PUT, document["_id"].get<std::string>(), document});
}

Cid Store::doc_del(const std::string& id) {
  require(StoreKind::docs, "doc_del");
  return append_op({OpTag::DEL, id, std::nullopt});
}

std::optional<json> Store::doc_get(const std::string& id) const {
  require(StoreKind::docs, "doc_get");
  MaterializedState s = state();
  auto it = s.mapping.find(id);
  if (it == s.mapping.end()) return std::nullopt;
  return it->second;
}

std::vector<json> Store::doc_query(const std::string& id_prefix) const {
  require(StoreKind::docs, "doc_query");
  MaterializedState s = state();
  std::vector<json> out;
  for (auto it = s.mapping.lower_bound(id_prefix); it != s.mapping.end(); ++it) {
    if (it->first.compare(0, id_prefix.size(), id_prefix) != 0) break;
    out.push_back(it->second);
  }
  return out;
}

Cid Store::counter_inc(int64_t amount) {
  require(StoreKind::counter, "counter_inc");
  if (amount <= 0) throw MalformedOperation("counter increments must be positive");
  return append_op({OpTag::INC, std::nullopt, json(amount)});
}

int64_t Store::counter_value() const {
  require(StoreKind::counter, "counter_value");
  return state().counter;
}

}  // namespace skytrace::stores
