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

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skytrace/blockstore.hpp"
#include "skytrace/ed25519.hpp"

namespace skytrace::oplog {

using blockstore::BlockStore;
using blockstore::Cid;
using blockstore::CidHash;

// One signed operation in the append-only merge log. The signature covers the
// canonical serialization of (payload, lamport, author, parents); the cid is
// the hash of the canonical serialization including the signature, which is
// also the exact byte representation stored and replicated.
struct Entry {
  Bytes payload;
  uint64_t lamport = 0;
  crypto::PublicKey author{};
  std::vector<Cid> parents;  // sorted, unique
  crypto::Signature sig{};
  Cid cid;

  Bytes signed_view() const;    // canonical bytes without the signature
  Bytes serialized() const;     // canonical bytes including the signature
  bool verify_signature() const;

  // Strict parse: recomputes and checks the cid, rejects unknown keys,
  // non-canonical field encodings and unsorted parents.
  static Entry parse(BytesView bytes);

  // Traversal order: (lamport, author bytes, cid bytes) ascending. Parents
  // always precede children because a child's lamport is strictly larger.
  static bool order_before(const Entry& a, const Entry& b);
};

struct BadSignature : std::runtime_error {
  explicit BadSignature(const std::string& author_hex)
      : std::runtime_error("entry signature invalid (author " + author_hex + ")") {}
};
struct MalformedEntry : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StorageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Outcome of a join: how many entries were ingested, rejected or parked in
// the missing-parent quarantine.
struct JoinReport {
  size_t added = 0;
  size_t already_known = 0;
  size_t bad_signature = 0;
  size_t malformed = 0;
  size_t quarantined = 0;
};

std::string derive_log_address(const std::string& type_tag, const crypto::PublicKey& creator,
                               const std::string& name);

constexpr size_t kQuarantineCap = 10000;

// Replicated, append-only log state. Append is single-writer per replica;
// join may race with reads, so every state transition happens under one lock
// and is all-or-nothing per entry.
class Log {
 public:
  Log(std::string address, std::shared_ptr<BlockStore> store, crypto::KeyPair identity);

  const std::string& address() const { return address_; }
  const crypto::KeyPair& identity() const { return identity_; }
  std::shared_ptr<BlockStore> store() const { return store_; }

  Entry append(BytesView payload);  // throws StorageFailure

  JoinReport join(const std::vector<Entry>& foreign);

  std::vector<Entry> traverse() const;

  std::vector<Cid> heads() const;          // sorted
  std::set<Cid> entry_index() const;
  size_t size() const;
  bool contains(const Cid& cid) const;
  std::optional<Entry> find(const Cid& cid) const;
  size_t quarantine_size() const;
  // Known = ingested or parked in quarantine (no point re-fetching either).
  bool known(const Cid& cid) const;
  // Parents of quarantined entries that are still absent; what sync needs next.
  std::vector<Cid> missing_parents() const;

  // Re-reads the heads file and loads any entries another process persisted
  // to the shared blockstore. No-op for purely in-memory logs.
  void reload_from_disk();

  // When set, heads are mirrored to <dir>/<address>.heads.json on every
  // mutation so a reader process can see live state.
  void persist_heads_to(const std::filesystem::path& dir);

  static std::vector<Cid> read_heads_file(const std::filesystem::path& dir,
                                          const std::string& address);

 private:
  JoinReport join_locked(const std::vector<Entry>& foreign);
  bool ingest(const Entry& entry, JoinReport& report);
  void drain_quarantine(JoinReport& report);
  void recompute_heads();
  void write_heads_file() const;
  void load_closure_from_store(const std::vector<Cid>& tips);

  std::string address_;
  std::shared_ptr<BlockStore> store_;
  crypto::KeyPair identity_;

  mutable std::mutex mu_;
  std::map<Cid, Entry> entries_;
  std::set<Cid> heads_;
  std::set<Cid> referenced_;  // every cid named as a parent by a known entry
  std::deque<Entry> quarantine_;
  std::optional<std::filesystem::path> heads_dir_;
};

}  // namespace skytrace::oplog
