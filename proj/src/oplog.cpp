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

#include "skytrace/oplog.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace skytrace::oplog {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json signed_fields(const Entry& e) {
  ordered_json doc;
  doc["payload"] = base64_encode(BytesView(e.payload.data(), e.payload.size()));
  doc["lamport"] = e.lamport;
  doc["author"] = to_hex(BytesView(e.author.data(), e.author.size()));
  ordered_json parents = ordered_json::array();
  for (const Cid& p : e.parents) parents.push_back(p.hex());
  doc["parents"] = std::move(parents);
  return doc;
}

Bytes dump_bytes(const ordered_json& doc) {
  std::string s = doc.dump();
  return Bytes(s.begin(), s.end());
}

template <size_t N>
std::array<uint8_t, N> fixed_from_hex(const std::string& hex, const char* what) {
  Bytes raw = from_hex(hex);
  if (raw.size() != N) throw MalformedEntry(std::string(what) + " has wrong length");
  std::array<uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

}  // namespace

Bytes Entry::signed_view() const {
  return dump_bytes(signed_fields(*this));
}

Bytes Entry::serialized() const {
  ordered_json doc = signed_fields(*this);
  doc["sig"] = to_hex(BytesView(sig.data(), sig.size()));
  return dump_bytes(doc);
}

bool Entry::verify_signature() const {
  Bytes msg = signed_view();
  return crypto::verify(author, BytesView(msg.data(), msg.size()), sig);
}

Entry Entry::parse(BytesView bytes) {
  auto doc = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw MalformedEntry("entry is not a JSON object");
  static const std::set<std::string> kKeys = {"payload", "lamport", "author", "parents", "sig"};
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.contains(key)) throw MalformedEntry("unknown entry field: " + key);
  }
  for (const auto& key : kKeys) {
    if (!doc.contains(key)) throw MalformedEntry("missing entry field: " + key);
  }
  if (!doc["payload"].is_string() || !doc["lamport"].is_number_unsigned() ||
      !doc["author"].is_string() || !doc["parents"].is_array() || !doc["sig"].is_string()) {
    throw MalformedEntry("entry field has wrong type");
  }

  Entry e;
  try {
    e.payload = base64_decode(doc["payload"].get<std::string>());
    e.lamport = doc["lamport"].get<uint64_t>();
    e.author = fixed_from_hex<32>(doc["author"].get<std::string>(), "author");
    for (const auto& p : doc["parents"]) {
      if (!p.is_string()) throw MalformedEntry("parent cid is not a string");
      e.parents.push_back(Cid::parse(p.get<std::string>()));
    }
    e.sig = fixed_from_hex<64>(doc["sig"].get<std::string>(), "sig");
  } catch (const EncodingError& err) {
    throw MalformedEntry(err.what());
  }
  if (!std::is_sorted(e.parents.begin(), e.parents.end()) ||
      std::adjacent_find(e.parents.begin(), e.parents.end()) != e.parents.end()) {
    throw MalformedEntry("parents not sorted and unique");
  }

  // The canonical bytes are the wire bytes: anything that re-serializes
  // differently (escaping, whitespace, digit case) is rejected here.
  Bytes canon = e.serialized();
  if (canon.size() != bytes.size() || !std::equal(canon.begin(), canon.end(), bytes.begin())) {
    throw MalformedEntry("entry bytes are not canonical");
  }
  e.cid = Cid::of(bytes);
  return e;
}

bool Entry::order_before(const Entry& a, const Entry& b) {
  if (a.lamport != b.lamport) return a.lamport < b.lamport;
  if (a.author != b.author) return a.author < b.author;
  return a.cid < b.cid;
}

std::string derive_log_address(const std::string& type_tag, const crypto::PublicKey& creator,
                               const std::string& name) {
  ordered_json doc;
  doc["type"] = type_tag;
  doc["creator"] = to_hex(BytesView(creator.data(), creator.size()));
  doc["name"] = name;
  return to_hex(sha256(doc.dump()));
}

Log::Log(std::string address, std::shared_ptr<BlockStore> store, crypto::KeyPair identity)
    : address_(std::move(address)), store_(std::move(store)), identity_(identity) {}

Entry Log::append(BytesView payload) {
  std::lock_guard lock(mu_);
  Entry e;
  e.payload.assign(payload.begin(), payload.end());
  e.author = identity_.pub;
  uint64_t max_lamport = 0;
  for (const Cid& h : heads_) max_lamport = std::max(max_lamport, entries_.at(h).lamport);
  e.lamport = max_lamport + 1;
  e.parents.assign(heads_.begin(), heads_.end());

  Bytes msg = e.signed_view();
  e.sig = crypto::sign(identity_.seed, BytesView(msg.data(), msg.size()));
  Bytes wire = e.serialized();
  try {
    e.cid = store_->put(BytesView(wire.data(), wire.size()));
  } catch (const std::exception& err) {
    throw StorageFailure(err.what());
  }

  for (const Cid& p : e.parents) referenced_.insert(p);
  entries_.emplace(e.cid, e);
  // the new entry references every previous head, so it is the sole head now
  heads_.clear();
  heads_.insert(e.cid);
  write_heads_file();
  return e;
}

JoinReport Log::join(const std::vector<Entry>& foreign) {
  std::lock_guard lock(mu_);
  return join_locked(foreign);
}

JoinReport Log::join_locked(const std::vector<Entry>& foreign) {
  JoinReport report;
  // Lowest lamport first so in-batch parents land before their children.
  std::vector<Entry> batch = foreign;
  std::stable_sort(batch.begin(), batch.end(), Entry::order_before);
  for (const Entry& e : batch) ingest(e, report);
  drain_quarantine(report);
  if (report.added > 0) {
    recompute_heads();
    write_heads_file();
  }
  return report;
}

bool Log::ingest(const Entry& entry, JoinReport& report) {
  Entry e = entry;
  if (e.cid == Cid{}) {
    Bytes wire = e.serialized();
    e.cid = Cid::of(BytesView(wire.data(), wire.size()));
  }
  if (entries_.contains(e.cid)) {
    ++report.already_known;
    return true;
  }
  if (!e.verify_signature()) {
    ++report.bad_signature;
    return false;
  }
  bool parents_known = true;
  for (const Cid& p : e.parents) {
    if (!entries_.contains(p)) {
      parents_known = false;
      break;
    }
  }
  if (!parents_known) {
    if (quarantine_.size() >= kQuarantineCap) quarantine_.pop_front();
    ++report.quarantined;
    quarantine_.push_back(e);
    return false;
  }
  for (const Cid& p : e.parents) {
    if (e.lamport <= entries_.at(p).lamport) {
      ++report.malformed;
      return false;
    }
  }
  Bytes wire = e.serialized();
  try {
    store_->put(BytesView(wire.data(), wire.size()));
  } catch (const std::exception& err) {
    throw StorageFailure(err.what());
  }
  for (const Cid& p : e.parents) referenced_.insert(p);
  entries_.emplace(e.cid, e);
  ++report.added;
  return true;
}

void Log::drain_quarantine(JoinReport& report) {
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = quarantine_.begin(); it != quarantine_.end();) {
      bool ready = true;
      for (const Cid& p : it->parents) {
        if (!entries_.contains(p)) {
          ready = false;
          break;
        }
      }
      if (ready) {
        JoinReport sub;
        ingest(*it, sub);
        report.added += sub.added;
        report.malformed += sub.malformed;
        it = quarantine_.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
}

void Log::recompute_heads() {
  heads_.clear();
  for (const auto& [cid, _] : entries_) {
    if (!referenced_.contains(cid)) heads_.insert(cid);
  }
}

std::vector<Entry> Log::traverse() const {
  std::lock_guard lock(mu_);
  std::vector<Entry> out;
  out.reserve(entries_.size());
  for (const auto& [_, e] : entries_) out.push_back(e);
  std::sort(out.begin(), out.end(), Entry::order_before);
  return out;
}

std::vector<Cid> Log::heads() const {
  std::lock_guard lock(mu_);
  return std::vector<Cid>(heads_.begin(), heads_.end());
}

std::set<Cid> Log::entry_index() const {
  std::lock_guard lock(mu_);
  std::set<Cid> out;
  for (const auto& [cid, _] : entries_) out.insert(cid);
  return out;
}

size_t Log::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

bool Log::contains(const Cid& cid) const {
  std::lock_guard lock(mu_);
  return entries_.contains(cid);
}

std::optional<Entry> Log::find(const Cid& cid) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(cid);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

size_t Log::quarantine_size() const {
  std::lock_guard lock(mu_);
  return quarantine_.size();
}

bool Log::known(const Cid& cid) const {
  std::lock_guard lock(mu_);
  if (entries_.contains(cid)) return true;
  for (const Entry& e : quarantine_) {
    if (e.cid == cid) return true;
  }
  return false;
}

std::vector<Cid> Log::missing_parents() const {
  std::lock_guard lock(mu_);
  std::set<Cid> missing;
  for (const Entry& e : quarantine_) {
    for (const Cid& p : e.parents) {
      if (!entries_.contains(p)) missing.insert(p);
    }
  }
  return std::vector<Cid>(missing.begin(), missing.end());
}

void Log::persist_heads_to(const std::filesystem::path& dir) {
  std::lock_guard lock(mu_);
  heads_dir_ = dir;
  std::filesystem::create_directories(dir);
  // Never clobber an existing heads file with pre-reload state.
  if (!std::filesystem::exists(dir / (address_ + ".heads.json"))) {
    write_heads_file();
  }
}

void Log::write_heads_file() const {
  if (!heads_dir_) return;
  ordered_json doc;
  doc["log_address"] = address_;
  ordered_json heads = ordered_json::array();
  for (const Cid& h : heads_) heads.push_back(h.hex());
  doc["heads"] = std::move(heads);
  std::filesystem::path target = *heads_dir_ / (address_ + ".heads.json");
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump() << "\n";
  }
  std::filesystem::rename(tmp, target);
}

std::vector<Cid> Log::read_heads_file(const std::filesystem::path& dir,
                                      const std::string& address) {
  std::ifstream in(dir / (address + ".heads.json"));
  if (!in) return {};
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("heads")) return {};
  std::vector<Cid> out;
  for (const auto& h : doc["heads"]) out.push_back(Cid::parse(h.get<std::string>()));
  return out;
}

// Assumes mu_ is held.
void Log::load_closure_from_store(const std::vector<Cid>& tips) {
  std::vector<Cid> stack = tips;
  std::vector<Entry> found;
  std::set<Cid> visited;
  while (!stack.empty()) {
    Cid cur = stack.back();
    stack.pop_back();
    if (visited.contains(cur) || entries_.contains(cur)) continue;
    visited.insert(cur);
    if (!store_->has(cur)) continue;
    Bytes wire = store_->get(cur);
    Entry e;
    try {
      e = Entry::parse(BytesView(wire.data(), wire.size()));
    } catch (const MalformedEntry&) {
      continue;  // corrupt on disk; scrub() is the loud path for this
    }
    for (const Cid& p : e.parents) stack.push_back(p);
    found.push_back(std::move(e));
  }
  join_locked(found);
}

void Log::reload_from_disk() {
  if (!heads_dir_) return;
  std::vector<Cid> tips = read_heads_file(*heads_dir_, address_);
  std::lock_guard lock(mu_);
  load_closure_from_store(tips);
}

}  // namespace skytrace::oplog
