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

#include <memory>

#include "doctest.h"
#include "skytrace/oplog.hpp"
#include "skytrace/rng.hpp"

using namespace skytrace;
using namespace skytrace::oplog;

namespace {

crypto::KeyPair key_of(uint8_t fill) {
  crypto::SecretSeed seed{};
  seed.fill(fill);
  return crypto::KeyPair::from_seed(seed);
}

std::shared_ptr<Log> fresh_log(uint8_t key_fill, const std::string& address = "logA") {
  return std::make_shared<Log>(address, std::make_shared<blockstore::MemoryBlockStore>(),
                               key_of(key_fill));
}

Bytes payload_bytes(const std::string& s) {
  return to_bytes(s);
}

// Serialized traversal, used to compare replica states byte for byte.
Bytes traversal_blob(const Log& log) {
  Bytes out;
  for (const Entry& e : log.traverse()) {
    Bytes wire = e.serialized();
    out.insert(out.end(), wire.begin(), wire.end());
    out.push_back('\n');
  }
  return out;
}

}  // namespace

TEST_CASE("append base case and chain case") {
  auto log = fresh_log(1);
  Bytes p1 = payload_bytes("first");
  Entry e1 = log->append(BytesView(p1.data(), p1.size()));
  CHECK(e1.lamport == 1);
  CHECK(e1.parents.empty());
  CHECK(log->heads() == std::vector<blockstore::Cid>{e1.cid});

  Bytes p2 = payload_bytes("second");
  Entry e2 = log->append(BytesView(p2.data(), p2.size()));
  CHECK(e2.lamport == 2);
  REQUIRE(e2.parents.size() == 1);
  CHECK(e2.parents[0] == e1.cid);
  CHECK(log->heads() == std::vector<blockstore::Cid>{e2.cid});

  // the acknowledgement hash resolves in the blockstore
  CHECK(log->store()->has(e2.cid));
}

TEST_CASE("entries roundtrip through canonical serialization") {
  auto log = fresh_log(2);
  Bytes p = payload_bytes("payload with spaces and \"quotes\"");
  Entry e = log->append(BytesView(p.data(), p.size()));
  Bytes wire = e.serialized();
  Entry back = Entry::parse(BytesView(wire.data(), wire.size()));
  CHECK(back.cid == e.cid);
  CHECK(back.payload == e.payload);
  CHECK(back.lamport == e.lamport);
  CHECK(back.author == e.author);
  CHECK(back.verify_signature());
}

TEST_CASE("two concurrent appends join to two heads") {
  auto a = fresh_log(1);
  auto b = fresh_log(2);
  Bytes pa = payload_bytes("from a");
  Bytes pb = payload_bytes("from b");
  Entry ea = a->append(BytesView(pa.data(), pa.size()));
  Entry eb = b->append(BytesView(pb.data(), pb.size()));

  a->join({eb});
  b->join({ea});
  CHECK(a->heads().size() == 2);
  CHECK(a->heads() == b->heads());
  CHECK(traversal_blob(*a) == traversal_blob(*b));
}

TEST_CASE("join is idempotent") {
  auto a = fresh_log(1);
  for (int i = 0; i < 5; ++i) {
    Bytes p = payload_bytes("p" + std::to_string(i));
    a->append(BytesView(p.data(), p.size()));
  }
  auto entries = a->traverse();
  auto heads_before = a->heads();
  JoinReport rep = a->join(entries);
  CHECK(rep.added == 0);
  CHECK(rep.already_known == entries.size());
  CHECK(a->heads() == heads_before);
}

TEST_CASE("join laws: commutative and associative over random 3-way splits") {
  // Build a pool of entries from three replicas with some cross-sync.
  Rng rng(424242);
  for (int trial = 0; trial < 20; ++trial) {
    auto r1 = fresh_log(1);
    auto r2 = fresh_log(2);
    auto r3 = fresh_log(3);
    std::vector<std::shared_ptr<Log>> replicas{r1, r2, r3};
    for (int step = 0; step < 12; ++step) {
      auto& log = replicas[rng.uniform_u64(3)];
      Bytes p = payload_bytes("t" + std::to_string(trial) + "s" + std::to_string(step));
      log->append(BytesView(p.data(), p.size()));
      if (rng.bernoulli(0.3)) {
        // partial sync between two random replicas
        auto& from = replicas[rng.uniform_u64(3)];
        auto& to = replicas[rng.uniform_u64(3)];
        to->join(from->traverse());
      }
    }
    std::vector<Entry> all;
    for (auto& r : replicas) {
      for (const Entry& e : r->traverse()) all.push_back(e);
    }
    // Random 3-way split of the pool.
    std::vector<Entry> a, b, c;
    for (const Entry& e : all) {
      switch (rng.uniform_u64(3)) {
        case 0: a.push_back(e); break;
        case 1: b.push_back(e); break;
        default: c.push_back(e); break;
      }
    }

    // join(join(A,B),C) vs join(A,join(B,C)) vs permutations
    auto apply = [&](const std::vector<std::vector<Entry>>& batches) {
      auto log = fresh_log(9);
      for (const auto& batch : batches) log->join(batch);
      return log;
    };
    auto left = apply({a, b, c});
    auto right = apply({c, b, a});
    auto mixed = apply({b, c, a});
    CHECK(left->heads() == right->heads());
    CHECK(left->heads() == mixed->heads());
    CHECK(left->entry_index() == right->entry_index());
    CHECK(traversal_blob(*left) == traversal_blob(*mixed));
  }
}

TEST_CASE("corrupted signature is rejected and log unchanged") {
  auto a = fresh_log(1);
  Bytes p = payload_bytes("honest");
  a->append(BytesView(p.data(), p.size()));

  auto b = fresh_log(2);
  Bytes pb = payload_bytes("tampered");
  Entry evil = b->append(BytesView(pb.data(), pb.size()));
  evil.sig[10] ^= 0x01;

  auto index_before = a->entry_index();
  JoinReport rep = a->join({evil});
  CHECK(rep.bad_signature == 1);
  CHECK(rep.added == 0);
  CHECK(a->entry_index() == index_before);
}

TEST_CASE("flipping any single bit of a serialized entry breaks acceptance") {
  auto log = fresh_log(4);
  Bytes p = payload_bytes("bit flip target payload");
  Entry e = log->append(BytesView(p.data(), p.size()));
  Bytes wire = e.serialized();

  Rng rng(999);
  int rejected = 0;
  constexpr int kTrials = 100;
  for (int t = 0; t < kTrials; ++t) {
    Bytes flipped = wire;
    size_t bit = rng.uniform_u64(flipped.size() * 8);
    flipped[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    try {
      Entry parsed = Entry::parse(BytesView(flipped.data(), flipped.size()));
      if (!parsed.verify_signature()) {
        ++rejected;
      }
    } catch (const MalformedEntry&) {
      ++rejected;
    }
  }
  CHECK(rejected == kTrials);
}

TEST_CASE("traversal order: lamport, then author, then cid; deterministic") {
  auto a = fresh_log(1);
  auto b = fresh_log(2);
  Bytes pa = payload_bytes("concurrent a");
  Bytes pb = payload_bytes("concurrent b");
  Entry ea = a->append(BytesView(pa.data(), pa.size()));
  Entry eb = b->append(BytesView(pb.data(), pb.size()));
  REQUIRE(ea.lamport == eb.lamport);

  a->join({eb});
  auto order = a->traverse();
  REQUIRE(order.size() == 2);
  CHECK(order[0].author < order[1].author);  // equal lamport ties break by author
}

TEST_CASE("single-author chain traverses in insertion order") {
  auto log = fresh_log(5);
  std::vector<blockstore::Cid> cids;
  for (int i = 0; i < 5; ++i) {
    Bytes p = payload_bytes("msg" + std::to_string(i));
    cids.push_back(log->append(BytesView(p.data(), p.size())).cid);
  }
  auto order = log->traverse();
  REQUIRE(order.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(order[i].cid == cids[i]);
}

TEST_CASE("missing parents are quarantined until they arrive") {
  auto source = fresh_log(1);
  for (int i = 0; i < 3; ++i) {
    Bytes p = payload_bytes("chain" + std::to_string(i));
    source->append(BytesView(p.data(), p.size()));
  }
  auto chain = source->traverse();  // [root, mid, tip]
  REQUIRE(chain.size() == 3);

  auto sink = fresh_log(2);
  JoinReport rep1 = sink->join({chain[2]});  // tip alone: parent missing
  CHECK(rep1.quarantined == 1);
  CHECK(rep1.added == 0);
  CHECK(sink->size() == 0);
  CHECK(sink->quarantine_size() == 1);
  CHECK(sink->missing_parents() == std::vector<blockstore::Cid>{chain[1].cid});

  JoinReport rep2 = sink->join({chain[0], chain[1]});  // parents arrive
  CHECK(rep2.added == 3);  // quarantine drained too
  CHECK(sink->quarantine_size() == 0);
  CHECK(sink->heads() == source->heads());
}

TEST_CASE("quarantine is capped at 10000 entries") {
  auto source = fresh_log(1);
  Bytes root = payload_bytes("root");
  source->append(BytesView(root.data(), root.size()));

  // orphan children: parents reference entries the sink never receives
  auto sink = fresh_log(2);
  std::vector<Entry> orphans;
  constexpr size_t kExtra = 50;
  for (size_t i = 0; i < kQuarantineCap + kExtra; ++i) {
    Bytes p = payload_bytes("orphan" + std::to_string(i));
    Entry e = source->append(BytesView(p.data(), p.size()));
    orphans.push_back(e);
  }
  // drop the root so every orphan chain entry is missing its ancestry
  std::vector<Entry> tail(orphans.begin() + 1, orphans.end());
  JoinReport rep = sink->join(tail);
  CHECK(rep.quarantined == tail.size());
  CHECK(sink->quarantine_size() == kQuarantineCap);  // oldest evicted
  CHECK(sink->size() == 0);
}

TEST_CASE("append-only: joins never remove entries") {
  auto a = fresh_log(1);
  auto b = fresh_log(2);
  for (int i = 0; i < 10; ++i) {
    Bytes p = payload_bytes("x" + std::to_string(i));
    (i % 2 ? a : b)->append(BytesView(p.data(), p.size()));
  }
  auto before = a->entry_index();
  a->join(b->traverse());
  auto after = a->entry_index();
  for (const auto& cid : before) CHECK(after.contains(cid));
}

TEST_CASE("log address derivation is deterministic and input-sensitive") {
  auto k1 = key_of(1);
  auto k2 = key_of(2);
  std::string a1 = derive_log_address("eventlog", k1.pub, "inventory");
  std::string a2 = derive_log_address("eventlog", k1.pub, "inventory");
  CHECK(a1 == a2);
  CHECK(a1.size() == 64);
  CHECK(derive_log_address("feed", k1.pub, "inventory") != a1);
  CHECK(derive_log_address("eventlog", k2.pub, "inventory") != a1);
  CHECK(derive_log_address("eventlog", k1.pub, "other") != a1);
}

TEST_CASE("entry with lamport not above its parents is rejected") {
  auto a = fresh_log(1);
  Bytes p1 = payload_bytes("base");
  Entry base = a->append(BytesView(p1.data(), p1.size()));

  // Hand-craft a signed child whose lamport ties its parent.
  auto forger = key_of(7);
  Entry child;
  child.payload = payload_bytes("bad lamport");
  child.lamport = base.lamport;  // must be strictly greater
  child.author = forger.pub;
  child.parents = {base.cid};
  Bytes msg = child.signed_view();
  child.sig = crypto::sign(forger.seed, BytesView(msg.data(), msg.size()));
  Bytes wire = child.serialized();
  child.cid = blockstore::Cid::of(BytesView(wire.data(), wire.size()));

  JoinReport rep = a->join({child});
  CHECK(rep.malformed == 1);
  CHECK(rep.added == 0);
  CHECK(a->size() == 1);
}
