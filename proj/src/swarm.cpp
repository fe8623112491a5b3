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

#include "skytrace/swarm.hpp"

#include <algorithm>

namespace skytrace::swarm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* type_name(MsgType t) {
  switch (t) {
    case MsgType::HEADS_ANNOUNCE: return "HEADS_ANNOUNCE";
    case MsgType::ENTRY_REQUEST: return "ENTRY_REQUEST";
    case MsgType::ENTRY_RESPONSE: return "ENTRY_RESPONSE";
  }
  return "?";
}

MsgType type_from_name(const std::string& name) {
  if (name == "HEADS_ANNOUNCE") return MsgType::HEADS_ANNOUNCE;
  if (name == "ENTRY_REQUEST") return MsgType::ENTRY_REQUEST;
  if (name == "ENTRY_RESPONSE") return MsgType::ENTRY_RESPONSE;
  throw MalformedMessage("unknown message type: " + name);
}

}  // namespace

Bytes Message::encode() const {
  ordered_json doc;
  doc["type"] = type_name(type);
  doc["log_address"] = log_address;
  switch (type) {
    case MsgType::HEADS_ANNOUNCE: {
      ordered_json arr = ordered_json::array();
      for (const Cid& c : heads) arr.push_back(c.hex());
      doc["heads"] = std::move(arr);
      break;
    }
    case MsgType::ENTRY_REQUEST: {
      ordered_json arr = ordered_json::array();
      for (const Cid& c : cids) arr.push_back(c.hex());
      doc["cids"] = std::move(arr);
      break;
    }
    case MsgType::ENTRY_RESPONSE: {
      ordered_json arr = ordered_json::array();
      for (const Bytes& e : entries) arr.push_back(base64_encode(BytesView(e.data(), e.size())));
      doc["entries"] = std::move(arr);
      break;
    }
  }
  std::string s = doc.dump();
  return Bytes(s.begin(), s.end());
}

Message Message::decode(BytesView bytes) {
  auto doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw MalformedMessage("not a JSON object");
  if (!doc.contains("type") || !doc["type"].is_string() || !doc.contains("log_address") ||
      !doc["log_address"].is_string()) {
    throw MalformedMessage("missing type or log_address");
  }
  Message msg;
  msg.type = type_from_name(doc["type"].get<std::string>());
  msg.log_address = doc["log_address"].get<std::string>();
  try {
    switch (msg.type) {
      case MsgType::HEADS_ANNOUNCE:
        if (!doc.contains("heads") || !doc["heads"].is_array()) {
          throw MalformedMessage("announce without heads");
        }
        for (const auto& h : doc["heads"]) msg.heads.push_back(Cid::parse(h.get<std::string>()));
        break;
      case MsgType::ENTRY_REQUEST:
        if (!doc.contains("cids") || !doc["cids"].is_array()) {
          throw MalformedMessage("request without cids");
        }
        for (const auto& c : doc["cids"]) msg.cids.push_back(Cid::parse(c.get<std::string>()));
        break;
      case MsgType::ENTRY_RESPONSE:
        if (!doc.contains("entries") || !doc["entries"].is_array()) {
          throw MalformedMessage("response without entries");
        }
        for (const auto& e : doc["entries"]) {
          msg.entries.push_back(base64_decode(e.get<std::string>()));
        }
        break;
    }
  } catch (const json::exception& err) {
    throw MalformedMessage(err.what());
  } catch (const EncodingError& err) {
    throw MalformedMessage(err.what());
  }
  return msg;
}

// --- network model -------------------------------------------------------

NetworkModel NetworkModel::intranet() {
  NetworkModel m;
  m.min_ms = 0.935 / 2.0;
  m.avg_ms = 1.034 / 2.0;
  m.max_ms = 1.695 / 2.0;
  return m;
}

NetworkModel NetworkModel::internet() {
  NetworkModel m;
  m.min_ms = 37.948 / 2.0;
  m.avg_ms = 39.362 / 2.0;
  m.max_ms = 51.172 / 2.0;
  return m;
}

double NetworkModel::triangular_mode() const {
  double mode = 3.0 * avg_ms - min_ms - max_ms;
  return std::clamp(mode, min_ms, max_ms);
}

double NetworkModel::sample_delay_ms(Rng& rng) const {
  if (shape == Shape::empirical) {
    if (samples_ms.empty()) return 0.0;
    return samples_ms[rng.uniform_u64(samples_ms.size())];
  }
  return rng.triangular(min_ms, triangular_mode(), max_ms);
}

NetworkModel NetworkModel::from_json(const json& doc) {
  NetworkModel m;
  std::string kind = doc.value("kind", "triangular");
  if (kind == "empirical") {
    m.shape = Shape::empirical;
    for (const auto& s : doc.at("samples_ms")) m.samples_ms.push_back(s.get<double>());
  } else if (kind == "triangular") {
    m.shape = Shape::triangular;
    if (doc.contains("rtt_min_ms")) {
      m.min_ms = doc.at("rtt_min_ms").get<double>() / 2.0;
      m.avg_ms = doc.at("rtt_avg_ms").get<double>() / 2.0;
      m.max_ms = doc.at("rtt_max_ms").get<double>() / 2.0;
    } else {
      m.min_ms = doc.at("min_ms").get<double>();
      m.avg_ms = doc.at("avg_ms").get<double>();
      m.max_ms = doc.at("max_ms").get<double>();
    }
  } else {
    throw std::invalid_argument("unknown network model kind: " + kind);
  }
  m.loss = doc.value("loss", 0.0);
  m.seed = doc.value("seed", uint64_t{0});
  return m;
}

json NetworkModel::to_json() const {
  json doc;
  if (shape == Shape::empirical) {
    doc["kind"] = "empirical";
    doc["samples_ms"] = samples_ms;
  } else {
    doc["kind"] = "triangular";
    doc["min_ms"] = min_ms;
    doc["avg_ms"] = avg_ms;
    doc["max_ms"] = max_ms;
  }
  doc["loss"] = loss;
  doc["seed"] = seed;
  return doc;
}

// --- peer core -------------------------------------------------------------

PeerCore::PeerCore(std::string name, crypto::KeyPair identity,
                   std::shared_ptr<blockstore::BlockStore> store)
    : name_(std::move(name)), identity_(identity), store_(std::move(store)) {}

std::shared_ptr<Log> PeerCore::open_log(const std::string& address) {
  auto it = logs_.find(address);
  if (it != logs_.end()) return it->second;
  auto log = std::make_shared<Log>(address, store_, identity_);
  logs_[address] = log;
  return log;
}

std::shared_ptr<Log> PeerCore::log(const std::string& address) const {
  auto it = logs_.find(address);
  if (it == logs_.end()) throw std::out_of_range("log not replicated here: " + address);
  return it->second;
}

std::vector<std::string> PeerCore::log_addresses() const {
  std::vector<std::string> out;
  for (const auto& [addr, _] : logs_) out.push_back(addr);
  return out;
}

Message PeerCore::make_announce(const std::string& address) {
  Message msg;
  msg.type = MsgType::HEADS_ANNOUNCE;
  msg.log_address = address;
  msg.heads = log(address)->heads();
  ++stats_.announces_sent;
  return msg;
}

std::vector<Message> PeerCore::request_missing(const std::string& address,
                                               const std::vector<Cid>& wanted) {
  auto log_ptr = log(address);
  std::set<Cid>& pending = pending_[address];
  std::vector<Cid> ask;
  for (const Cid& cid : wanted) {
    if (!log_ptr->known(cid) && !pending.contains(cid)) {
      pending.insert(cid);
      ask.push_back(cid);
    }
  }
  if (ask.empty()) return {};
  Message req;
  req.type = MsgType::ENTRY_REQUEST;
  req.log_address = address;
  req.cids = std::move(ask);
  ++stats_.requests_sent;
  return {std::move(req)};
}

std::vector<Message> PeerCore::handle(const Message& msg) {
  auto it = logs_.find(msg.log_address);
  if (it == logs_.end()) return {};  // not replicating this log
  auto log_ptr = it->second;

  switch (msg.type) {
    case MsgType::HEADS_ANNOUNCE:
      return request_missing(msg.log_address, msg.heads);

    case MsgType::ENTRY_REQUEST: {
      Message resp;
      resp.type = MsgType::ENTRY_RESPONSE;
      resp.log_address = msg.log_address;
      for (const Cid& cid : msg.cids) {
        auto entry = log_ptr->find(cid);
        if (entry) resp.entries.push_back(entry->serialized());
      }
      if (resp.entries.empty()) return {};
      ++stats_.responses_sent;
      return {std::move(resp)};
    }

    case MsgType::ENTRY_RESPONSE: {
      std::vector<oplog::Entry> parsed;
      for (const Bytes& wire : msg.entries) {
        try {
          parsed.push_back(oplog::Entry::parse(BytesView(wire.data(), wire.size())));
        } catch (const oplog::MalformedEntry&) {
          ++stats_.malformed_dropped;
        }
      }
      std::set<Cid>& pending = pending_[msg.log_address];
      for (const oplog::Entry& e : parsed) pending.erase(e.cid);
      stats_.entries_received += parsed.size();
      log_ptr->join(parsed);
      // Whatever the quarantine still lacks gets asked for next.
      return request_missing(msg.log_address, log_ptr->missing_parents());
    }
  }
  return {};
}

void PeerCore::expire_pending() {
  pending_.clear();
}

// --- scheduler -------------------------------------------------------------

void Scheduler::at(double t_ms, std::function<void()> fn) {
  queue_.push(Event{std::max(t_ms, now_), next_seq_++, std::move(fn)});
}

void Scheduler::after(double dt_ms, std::function<void()> fn) {
  at(now_ + dt_ms, std::move(fn));
}

bool Scheduler::step() {
  if (queue_.empty()) return false;
  Event ev = queue_.top();
  queue_.pop();
  now_ = ev.t;
  ev.fn();
  return true;
}

void Scheduler::run_until(double t_ms) {
  while (!queue_.empty() && queue_.top().t <= t_ms) step();
  now_ = std::max(now_, t_ms);
}

// --- simulated swarm --------------------------------------------------------

SimNet::SimNet(NetworkModel model, uint64_t seed) : model_(model), rng_(seed ^ model.seed) {}

PeerCore& SimNet::add_peer(const PeerConfig& config, const crypto::SecretSeed& identity_seed) {
  if (config.announce_period_ms <= 0.0) {
    throw std::invalid_argument("announce period must be positive");
  }
  auto store = std::make_shared<blockstore::MemoryBlockStore>();
  auto core = std::make_unique<PeerCore>(config.listen, crypto::KeyPair::from_seed(identity_seed),
                                         store);
  for (const std::string& addr : config.log_addresses) core->open_log(addr);
  PeerCore& ref = *core;
  peers_.emplace(config.listen, SimPeer{config, std::move(core)});
  return ref;
}

PeerCore& SimNet::peer(const std::string& name) {
  return *peers_.at(name).core;
}

void SimNet::set_link(const std::string& a, const std::string& b, bool up) {
  auto key = std::minmax(a, b);
  if (up) {
    severed_.erase({key.first, key.second});
  } else {
    severed_.insert({key.first, key.second});
  }
}

void SimNet::send(const std::string& from, const std::string& to, Message msg) {
  auto key = std::minmax(from, to);
  if (severed_.contains({key.first, key.second})) {
    ++dropped_;
    return;
  }
  if (model_.loss > 0.0 && rng_.bernoulli(model_.loss)) {
    ++dropped_;
    return;
  }
  ++sent_[msg.type];
  double delay = model_.sample_delay_ms(rng_);
  // Round-trip through the wire encoding so the sim exercises it too.
  Bytes wire = msg.encode();
  sched_.after(delay, [this, from, to, wire = std::move(wire)]() {
    auto it = peers_.find(to);
    if (it == peers_.end()) return;
    Message delivered;
    try {
      delivered = Message::decode(BytesView(wire.data(), wire.size()));
    } catch (const MalformedMessage&) {
      return;
    }
    for (Message& reply : it->second.core->handle(delivered)) {
      send(to, from, std::move(reply));
    }
  });
}

void SimNet::announce_tick(const std::string& name) {
  auto it = peers_.find(name);
  if (it == peers_.end()) return;
  SimPeer& peer = it->second;
  peer.core->expire_pending();
  for (const std::string& address : peer.core->log_addresses()) {
    for (const std::string& neighbor : peer.config.bootstrap) {
      send(name, neighbor, peer.core->make_announce(address));
    }
  }
  sched_.after(peer.config.announce_period_ms, [this, name]() { announce_tick(name); });
}

void SimNet::start() {
  for (const auto& [name, _] : peers_) {
    sched_.after(0.0, [this, name = name]() { announce_tick(name); });
  }
}

bool SimNet::converged() const {
  std::set<std::string> addresses;
  for (const auto& [_, p] : peers_) {
    for (const auto& addr : p.core->log_addresses()) addresses.insert(addr);
  }
  for (const std::string& addr : addresses) {
    std::optional<std::vector<Cid>> common;
    for (const auto& [_, p] : peers_) {
      std::vector<Cid> heads = p.core->log(addr)->heads();
      if (!common) {
        common = heads;
      } else if (*common != heads) {
        return false;
      }
    }
  }
  return true;
}

SyncReport SimNet::report(bool ok) const {
  SyncReport r;
  r.converged = ok;
  r.elapsed_ms = sched_.now_ms();
  for (const auto& [name, p] : peers_) {
    for (const auto& addr : p.core->log_addresses()) {
      std::vector<std::string> hex;
      for (const Cid& c : p.core->log(addr)->heads()) hex.push_back(c.hex());
      r.heads[addr][name] = std::move(hex);
    }
  }
  return r;
}

SyncReport SimNet::sync_until_quiescent(double deadline_ms) {
  if (converged()) return report(true);
  while (sched_.now_ms() < deadline_ms && sched_.step()) {
    if (converged()) return report(true);
  }
  return report(false);
}

size_t SimNet::sent(MsgType type) const {
  auto it = sent_.find(type);
  return it == sent_.end() ? 0 : it->second;
}

size_t SimNet::dropped() const {
  return dropped_;
}

}  // namespace skytrace::swarm
