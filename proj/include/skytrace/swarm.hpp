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
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "skytrace/oplog.hpp"
#include "skytrace/rng.hpp"

namespace skytrace::swarm {

using blockstore::Cid;
using oplog::Log;

// --- wire messages -------------------------------------------------------

enum class MsgType { HEADS_ANNOUNCE, ENTRY_REQUEST, ENTRY_RESPONSE };

struct MalformedMessage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every message names exactly one log address. An ENTRY_RESPONSE carries only
// entries that were asked for, as their canonical serialized bytes.
struct Message {
  MsgType type = MsgType::HEADS_ANNOUNCE;
  std::string log_address;
  std::vector<Cid> heads;      // HEADS_ANNOUNCE
  std::vector<Cid> cids;       // ENTRY_REQUEST
  std::vector<Bytes> entries;  // ENTRY_RESPONSE

  Bytes encode() const;
  static Message decode(BytesView bytes);  // throws MalformedMessage
};

// --- network model -------------------------------------------------------

// One-way delay sampler. The triangular shape takes the paper-style
// (min, avg, max) triple; the mode is solved so the mean hits avg and clamped
// into [min, max] when the triple is too skewed for a triangular shape.
struct NetworkModel {
  enum class Shape { triangular, empirical };
  Shape shape = Shape::triangular;
  double min_ms = 0.0;
  double avg_ms = 0.0;
  double max_ms = 0.0;
  std::vector<double> samples_ms;  // empirical
  double loss = 0.0;
  uint64_t seed = 0;

  static NetworkModel intranet();  // paper round-trip triple, halved
  static NetworkModel internet();

  static NetworkModel from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  double sample_delay_ms(Rng& rng) const;
  double triangular_mode() const;
};

struct PeerConfig {
  std::string listen;                   // host:port (tcp) or a sim name
  std::vector<std::string> bootstrap;   // neighbor addresses
  double announce_period_ms = 500.0;
  std::vector<std::string> log_addresses;
};

// --- replication logic (transport-independent) ---------------------------

struct PeerStats {
  size_t announces_sent = 0;
  size_t requests_sent = 0;
  size_t responses_sent = 0;
  size_t entries_received = 0;
  size_t malformed_dropped = 0;
};

// The per-peer replication brain: owns the logs it replicates and answers
// messages with reply messages. Transports (sim scheduler, TCP node) only
// move the bytes.
class PeerCore {
 public:
  PeerCore(std::string name, crypto::KeyPair identity,
           std::shared_ptr<blockstore::BlockStore> store);

  const std::string& name() const { return name_; }
  std::shared_ptr<Log> open_log(const std::string& address);
  std::shared_ptr<Log> log(const std::string& address) const;
  std::vector<std::string> log_addresses() const;

  Message make_announce(const std::string& address);
  // Replies are addressed back to whoever delivered `msg`.
  std::vector<Message> handle(const Message& msg);
  // Forget in-flight request bookkeeping so lost responses get re-asked.
  void expire_pending();

  const PeerStats& stats() const { return stats_; }

 private:
  std::vector<Message> request_missing(const std::string& address,
                                       const std::vector<Cid>& wanted);

  std::string name_;
  crypto::KeyPair identity_;
  std::shared_ptr<blockstore::BlockStore> store_;
  std::map<std::string, std::shared_ptr<Log>> logs_;
  std::map<std::string, std::set<Cid>> pending_;
  PeerStats stats_;
};

// --- deterministic simulation --------------------------------------------

// Single-threaded discrete-event loop over a virtual clock; with a fixed seed
// the whole swarm run is bit-reproducible.
class Scheduler {
 public:
  double now_ms() const { return now_; }
  void at(double t_ms, std::function<void()> fn);
  void after(double dt_ms, std::function<void()> fn);
  bool step();  // runs the earliest event; false when empty
  void run_until(double t_ms);

 private:
  struct Event {
    double t;
    uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& other) const {
      return t != other.t ? t > other.t : seq > other.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  double now_ = 0.0;
  uint64_t next_seq_ = 0;
};

struct SyncReport {
  bool converged = false;
  double elapsed_ms = 0.0;
  // log address -> peer name -> heads; filled on timeout for diagnosis,
  // and on success with the common heads.
  std::map<std::string, std::map<std::string, std::vector<std::string>>> heads;
};

class SimNet {
 public:
  SimNet(NetworkModel model, uint64_t seed);

  PeerCore& add_peer(const PeerConfig& config, const crypto::SecretSeed& identity_seed);
  PeerCore& peer(const std::string& name);
  Scheduler& scheduler() { return sched_; }

  void set_link(const std::string& a, const std::string& b, bool up);

  // Arms every peer's periodic announce timer.
  void start();

  bool converged() const;
  SyncReport sync_until_quiescent(double deadline_ms);

  size_t sent(MsgType type) const;
  size_t dropped() const;

 private:
  struct SimPeer {
    PeerConfig config;
    std::unique_ptr<PeerCore> core;
  };

  void send(const std::string& from, const std::string& to, Message msg);
  void announce_tick(const std::string& name);
  SyncReport report(bool ok) const;

  Scheduler sched_;
  NetworkModel model_;
  Rng rng_;
  std::map<std::string, SimPeer> peers_;
  std::set<std::pair<std::string, std::string>> severed_;
  std::map<MsgType, size_t> sent_;
  size_t dropped_ = 0;
};

}  // namespace skytrace::swarm
