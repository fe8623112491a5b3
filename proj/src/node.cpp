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

#include "skytrace/node.hpp"

#include <chrono>

namespace skytrace::node {

namespace fs = std::filesystem;

fs::path TcpNode::blocks_dir(const fs::path& data_dir) {
  return data_dir / "blocks";
}

fs::path TcpNode::heads_dir(const fs::path& data_dir) {
  return data_dir / "heads";
}

TcpNode::TcpNode(swarm::PeerConfig config, fs::path data_dir, crypto::KeyPair identity)
    : config_(std::move(config)), data_dir_(std::move(data_dir)) {
  store_ = std::make_shared<blockstore::DiskBlockStore>(blocks_dir(data_dir_));
  core_ = std::make_unique<swarm::PeerCore>(config_.listen, identity, store_);
  for (const std::string& address : config_.log_addresses) {
    auto log = core_->open_log(address);
    log->persist_heads_to(heads_dir(data_dir_));
    log->reload_from_disk();
  }
}

void TcpNode::start() {
  store_->scrub();
  listener_ = net::listen_on(config_.listen);
  running_.store(true);
  serve_thread_ = std::thread([this] { serve_loop(); });
  announce_thread_ = std::thread([this] { announce_loop(); });
}

void TcpNode::stop() {
  running_.store(false);
  listener_.close();
  if (serve_thread_.joinable()) serve_thread_.join();
  if (announce_thread_.joinable()) announce_thread_.join();
}

void TcpNode::serve_loop() {
  while (running_.load()) {
    auto conn = net::accept_on(listener_, 200);
    if (!conn) continue;
    handle_connection(std::move(*conn));
  }
}

// One connection = one conversation: read a frame, reply with whatever the
// core wants to say back, repeat until the peer closes.
void TcpNode::handle_connection(net::Socket conn) {
  try {
    while (running_.load()) {
      auto payload = conn.read_frame(2000);
      if (!payload) break;
      swarm::Message msg;
      try {
        msg = swarm::Message::decode(BytesView(payload->data(), payload->size()));
      } catch (const swarm::MalformedMessage&) {
        break;  // drop the conversation, count nothing
      }
      std::vector<swarm::Message> replies;
      {
        std::lock_guard lock(core_mu_);
        replies = core_->handle(msg);
      }
      if (replies.empty()) break;  // nothing more to say, end the conversation
      for (const swarm::Message& reply : replies) {
        Bytes wire = reply.encode();
        conn.write_frame(BytesView(wire.data(), wire.size()));
      }
    }
  } catch (const net::NetError&) {
    // peer went away mid-conversation; nothing to clean up
  }
}

void TcpNode::announce_loop() {
  auto period = std::chrono::milliseconds(
      static_cast<int64_t>(std::max(config_.announce_period_ms, 50.0)));
  while (running_.load()) {
    for (const std::string& address : config_.log_addresses) {
      swarm::Message announce;
      {
        std::lock_guard lock(core_mu_);
        core_->expire_pending();
        core_->log(address)->reload_from_disk();
        announce = core_->make_announce(address);
      }
      Bytes wire = announce.encode();
      for (const std::string& peer : config_.bootstrap) {
        try {
          net::Socket conn = net::connect_to(peer, 1000);
          conn.write_frame(BytesView(wire.data(), wire.size()));
          // Keep the conversation going while the peer asks for entries.
          while (auto payload = conn.read_frame(1000)) {
            swarm::Message msg = swarm::Message::decode(BytesView(payload->data(), payload->size()));
            std::vector<swarm::Message> replies;
            {
              std::lock_guard lock(core_mu_);
              replies = core_->handle(msg);
            }
            if (replies.empty()) break;
            for (const swarm::Message& reply : replies) {
              Bytes out = reply.encode();
              conn.write_frame(BytesView(out.data(), out.size()));
            }
          }
        } catch (const net::NetError&) {
          // peer down; next period retries
        } catch (const swarm::MalformedMessage&) {
        }
      }
    }
    auto waited = std::chrono::milliseconds(0);
    while (running_.load() && waited < period) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      waited += std::chrono::milliseconds(20);
    }
  }
}

}  // namespace skytrace::node
