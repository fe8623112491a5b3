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

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <thread>

#include "skytrace/net.hpp"
#include "skytrace/swarm.hpp"

namespace skytrace::node {

// Real-clock replication peer: a frame listener plus a periodic announcer,
// both driving one PeerCore. Logs live on a disk blockstore under data_dir so
// other local processes (insert, status) can share them.
class TcpNode {
 public:
  TcpNode(swarm::PeerConfig config, std::filesystem::path data_dir,
          crypto::KeyPair identity);

  // Scrubs the blockstore first; throws blockstore::CorruptBlock naming the
  // offending cid.
  void start();
  void stop();
  bool running() const { return running_.load(); }

  swarm::PeerCore& core() { return *core_; }

  static std::filesystem::path blocks_dir(const std::filesystem::path& data_dir);
  static std::filesystem::path heads_dir(const std::filesystem::path& data_dir);

 private:
  void serve_loop();
  void announce_loop();
  void handle_connection(net::Socket conn);

  swarm::PeerConfig config_;
  std::filesystem::path data_dir_;
  std::shared_ptr<blockstore::DiskBlockStore> store_;
  std::unique_ptr<swarm::PeerCore> core_;
  std::mutex core_mu_;
  net::Socket listener_;
  std::thread serve_thread_;
  std::thread announce_thread_;
  std::atomic<bool> running_{false};
};

}  // namespace skytrace::node
