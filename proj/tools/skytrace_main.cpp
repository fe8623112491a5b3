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

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "skytrace/bench.hpp"
#include "skytrace/chain.hpp"
#include "skytrace/net.hpp"
#include "skytrace/node.hpp"
#include "skytrace/pipeline.hpp"
#include "skytrace/rfidsim.hpp"
#include "skytrace/stores.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skytrace;

namespace {

// Exit codes are a stable contract:
//   0 ok / Verified          3 invalid auth token
//   1 Mismatch / failure     4 chain unreachable (pending anchor)
//   2 Pending                5 MissingAnchor
//  64 usage / config error
constexpr int kExitMismatch = 1;
constexpr int kExitPending = 2;
constexpr int kExitAuth = 3;
constexpr int kExitChainDown = 4;
constexpr int kExitMissingAnchor = 5;
constexpr int kExitUsage = 64;

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

struct NodeSettings {
  fs::path data_dir;
  fs::path identity_key_file;
  std::string listen = "127.0.0.1:7701";
  std::vector<std::string> peers;
  double announce_period_ms = 500.0;
  std::vector<std::string> replicate;
  std::string store_address;

  std::string chain_endpoint = "embedded";  // or host:port
  std::string chain_listen;                 // node run hosts the service when set
  fs::path chain_dir;
  chain::ChainConfig chain_config;
  std::string contract;

  bool virtual_clock = true;
  double acceleration = 1.0;
  uint64_t seed = 0;
};

NodeSettings load_settings(const fs::path& config_path) {
  json doc = load_json_file(config_path);
  NodeSettings s;
  s.data_dir = doc.at("data_dir").get<std::string>();
  s.identity_key_file = doc.value("identity_key_file",
                                  (s.data_dir / "identity.key").string());
  s.listen = doc.value("listen", s.listen);
  s.peers = doc.value("peers", s.peers);
  s.announce_period_ms = doc.value("announce_period_ms", s.announce_period_ms);
  s.replicate = doc.value("replicate", s.replicate);
  s.store_address = doc.value("store_address", "");

  json chain_doc = doc.value("chain", json::object());
  s.chain_endpoint = chain_doc.value("endpoint", s.chain_endpoint);
  s.chain_listen = chain_doc.value("listen", "");
  s.chain_dir = chain_doc.value("dir", (s.data_dir / "chain").string());
  s.chain_config = chain::ChainConfig::from_json(chain_doc);
  s.contract = chain_doc.value("contract", "");

  json clock_doc = doc.value("clock", json::object());
  std::string mode = clock_doc.value("mode", "virtual");
  if (mode != "virtual" && mode != "real") {
    throw std::invalid_argument("clock.mode must be virtual or real");
  }
  s.virtual_clock = mode == "virtual";
  s.acceleration = clock_doc.value("acceleration", 1.0);
  if (s.acceleration <= 0.0) throw std::invalid_argument("clock.acceleration must be positive");
  if (s.virtual_clock && clock_doc.contains("mode") && !clock_doc.contains("seed")) {
    throw std::invalid_argument("virtual clock mode requires a seed");
  }
  s.seed = clock_doc.value("seed", uint64_t{0});

  std::error_code ec;
  fs::create_directories(s.data_dir, ec);
  if (ec || !fs::is_directory(s.data_dir)) {
    throw std::invalid_argument("data directory not writable: " + s.data_dir.string());
  }
  return s;
}

crypto::KeyPair load_identity(const fs::path& key_file) {
  if (fs::exists(key_file)) {
    std::ifstream in(key_file);
    std::string hex;
    in >> hex;
    Bytes raw = from_hex(hex);
    if (raw.size() != 32) throw std::runtime_error("identity key must be 32 hex bytes");
    crypto::SecretSeed seed{};
    std::copy(raw.begin(), raw.end(), seed.begin());
    return crypto::KeyPair::from_seed(seed);
  }
  auto kp = crypto::KeyPair::generate();
  fs::create_directories(key_file.parent_path());
  std::ofstream out(key_file, std::ios::trunc);
  out << to_hex(BytesView(kp.seed.data(), kp.seed.size())) << "\n";
  fs::permissions(key_file, fs::perms::owner_read | fs::perms::owner_write);
  return kp;
}

std::string auth_token() {
  const char* tok = std::getenv("SKYTRACE_TOKEN");
  return tok ? tok : "";
}

std::string resolve_store_address(const NodeSettings& s, const crypto::KeyPair& identity) {
  if (!s.store_address.empty()) return s.store_address;
  return oplog::derive_log_address("eventlog", identity.pub, "inventory");
}

// Embedded-chain virtual clock, persisted next to the block file.
uint64_t load_chain_clock(const fs::path& dir) {
  std::ifstream in(dir / "clock.json");
  if (!in) return 0;
  json doc = json::parse(in, nullptr, false);
  return doc.is_discarded() ? 0 : doc.value("now_ms", uint64_t{0});
}

void save_chain_clock(const fs::path& dir, uint64_t now_ms) {
  fs::create_directories(dir);
  std::ofstream out(dir / "clock.json", std::ios::trunc);
  out << json{{"now_ms", now_ms}}.dump() << "\n";
}

std::unique_ptr<chain::Chain> open_embedded_chain(const NodeSettings& s) {
  fs::create_directories(s.chain_dir);
  if (fs::exists(s.chain_dir / "blocks.jsonl")) {
    return chain::Chain::load(s.chain_dir, s.chain_config);
  }
  auto fresh = std::make_unique<chain::Chain>(s.chain_config);
  fresh->persist_to(s.chain_dir);
  return fresh;
}

// The one anchoring contract; deployed on first use when unset.
std::string resolve_contract(const NodeSettings& s, chain::Chain& chain, uint64_t now_ms) {
  if (!s.contract.empty()) return s.contract;
  auto existing = chain.contract_addresses();
  if (!existing.empty()) return existing.front();
  return chain.deploy_contract("0x" + to_hex(sha256("skytrace-ground-station")).substr(0, 40),
                               now_ms);
}

struct OpenStore {
  std::shared_ptr<blockstore::DiskBlockStore> blocks;
  std::shared_ptr<oplog::Log> log;
  std::unique_ptr<stores::Store> store;
};

OpenStore open_disk_store(const NodeSettings& s, const crypto::KeyPair& identity,
                          const std::string& address) {
  OpenStore open;
  open.blocks = std::make_shared<blockstore::DiskBlockStore>(
      node::TcpNode::blocks_dir(s.data_dir));
  open.log = std::make_shared<oplog::Log>(address, open.blocks, identity);
  open.log->persist_heads_to(node::TcpNode::heads_dir(s.data_dir));
  open.log->reload_from_disk();
  open.store = std::make_unique<stores::Store>(stores::StoreKind::eventlog, open.log);
  return open;
}

volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) {
  g_stop = 1;
}

// --- subcommands ------------------------------------------------------------

int cmd_node_run(const std::string& config_path) {
  NodeSettings s = load_settings(config_path);
  auto identity = load_identity(s.identity_key_file);

  swarm::PeerConfig peer_cfg;
  peer_cfg.listen = s.listen;
  peer_cfg.bootstrap = s.peers;
  peer_cfg.announce_period_ms = s.announce_period_ms;
  peer_cfg.log_addresses = s.replicate;
  std::string store_address = resolve_store_address(s, identity);
  if (std::find(peer_cfg.log_addresses.begin(), peer_cfg.log_addresses.end(), store_address) ==
      peer_cfg.log_addresses.end()) {
    peer_cfg.log_addresses.push_back(store_address);
  }

  node::TcpNode node(peer_cfg, s.data_dir, identity);
  try {
    node.start();
  } catch (const blockstore::CorruptBlock& e) {
    std::cerr << "refusing to start: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const net::NetError& e) {
    std::cerr << "refusing to start: " << e.what() << "\n";
    return kExitMismatch;
  }
  std::cerr << "node listening on " << s.listen << ", replicating "
            << peer_cfg.log_addresses.size() << " log(s)\n";

  // Optional chain service on its own listener, mined on the real clock.
  std::unique_ptr<chain::Chain> chain_state;
  std::thread chain_thread;
  std::thread miner_thread;
  net::Socket chain_listener;
  auto unix_now_ms = [] {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
  };
  if (!s.chain_listen.empty()) {
    chain_state = open_embedded_chain(s);
    std::string contract = resolve_contract(s, *chain_state, unix_now_ms());
    chain_listener = net::listen_on(s.chain_listen);
    std::cerr << "chain service on " << s.chain_listen << ", contract " << contract << "\n";
    chain_thread = std::thread([&] {
      while (!g_stop) {
        auto conn = net::accept_on(chain_listener, 200);
        if (!conn) continue;
        try {
          while (auto payload = conn->read_frame(2000)) {
            json req = json::parse(payload->begin(), payload->end(), nullptr, false);
            json resp = req.is_discarded()
                            ? json{{"ok", false}, {"error", "BadRequest"}}
                            : chain::handle_request(*chain_state, req, unix_now_ms());
            std::string body = resp.dump();
            conn->write_frame(BytesView(reinterpret_cast<const uint8_t*>(body.data()),
                                        body.size()));
          }
        } catch (const net::NetError&) {
        }
      }
    });
    miner_thread = std::thread([&] {
      while (!g_stop) {
        chain_state->mint_step(unix_now_ms());
        std::this_thread::sleep_for(std::chrono::milliseconds(250));
      }
    });
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  std::cerr << "shutting down\n";
  node.stop();
  if (chain_thread.joinable()) chain_thread.join();
  if (miner_thread.joinable()) miner_thread.join();
  return 0;
}

int cmd_flight(const std::string& layout_path, const std::string& path_path,
               const std::string& params_path, uint64_t seed, const std::string& curve_out,
               const std::string& trace_tag, const std::string& trace_out) {
  auto layout = rfidsim::layout_from_json(load_json_file(layout_path));
  auto path = rfidsim::path_from_json(load_json_file(path_path));
  auto params = rfidsim::params_from_json(load_json_file(params_path));

  auto reads = rfidsim::simulate_flight(layout, path, params, seed);
  auto snapshot = rfidsim::snapshot_from_reads(reads, path.takeoff,
                                               static_cast<uint32_t>(layout.size()));
  Bytes canonical = pipeline::canonical_snapshot_bytes(snapshot);
  std::cout << std::string(canonical.begin(), canonical.end()) << "\n";

  if (!curve_out.empty()) {
    std::ofstream out(curve_out, std::ios::trunc);
    out << "t_ms,pct_read\n";
    for (const auto& [t, pct] : rfidsim::cumulative_curve(reads,
                                                          static_cast<uint32_t>(layout.size()))) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.0f,%.9f\n", t, pct);
      out << buf;
    }
    std::cerr << "read curve written to " << curve_out << "\n";
  }
  if (!trace_tag.empty()) {
    std::string target = trace_out.empty() ? trace_tag + "_ssi.csv" : trace_out;
    std::ofstream out(target, std::ios::trunc);
    out << "t_ms,ssi_dbm\n";
    for (const auto& r : rfidsim::ssi_trace(reads, trace_tag)) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.0f,%.3f\n", r.t_ms, r.ssi_dbm);
      out << buf;
    }
    std::cerr << "ssi trace for " << trace_tag << " written to " << target << "\n";
  }
  std::cerr << "detected " << snapshot.rows.size() << "/" << layout.size() << " tags\n";
  return 0;
}

int cmd_insert(const std::string& config_path, const std::string& snapshot_path, bool mine,
               bool hash_only) {
  NodeSettings s = load_settings(config_path);
  auto identity = load_identity(s.identity_key_file);
  auto snapshot = pipeline::parse_snapshot(load_json_file(snapshot_path));
  OpenStore open = open_disk_store(s, identity, resolve_store_address(s, identity));

  std::unique_ptr<chain::Chain> embedded;
  std::unique_ptr<pipeline::ChainAccess> chain_access;
  std::string contract = s.contract;
  uint64_t now_ms = 0;
  if (s.chain_endpoint == "embedded") {
    embedded = open_embedded_chain(s);
    // each command advances the persisted virtual clock one accelerated second
    now_ms = load_chain_clock(s.chain_dir) +
             static_cast<uint64_t>(1000.0 * (s.virtual_clock ? s.acceleration : 1.0));
    contract = resolve_contract(s, *embedded, now_ms);
    chain_access = std::make_unique<pipeline::LocalChainAccess>(*embedded,
                                                                [&now_ms] { return now_ms; });
  } else {
    chain_access = std::make_unique<pipeline::RemoteChainAccess>(s.chain_endpoint);
    now_ms = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    if (contract.empty()) {
      std::cerr << "remote chain endpoints need chain.contract in the config\n";
      return kExitUsage;
    }
  }

  pipeline::AnchorRecord record;
  try {
    record = pipeline::insert_inventory(snapshot, *open.store, *chain_access, contract,
                                        auth_token(), now_ms,
                                        hash_only ? pipeline::AnchorMode::hash_only
                                                  : pipeline::AnchorMode::full);
  } catch (const pipeline::AuthErrorAfterAppend& e) {
    std::cerr << "auth rejected: " << e.what() << "\n";
    std::cout << e.partial.to_json().dump() << "\n";
    return kExitAuth;
  }

  if (embedded) {
    if (mine && !record.pending_anchor) {
      if (s.chain_config.policy.kind == chain::MintPolicy::Kind::PoA) {
        uint64_t interval = s.chain_config.policy.poa_interval_ms;
        now_ms = (now_ms / interval + 1) * interval;
      } else {
        now_ms += static_cast<uint64_t>(s.chain_config.policy.pow_hi_ms) + 1;
      }
      embedded->mint_step(now_ms);
      std::cerr << "mined up to t=" << now_ms << " ms, height " << embedded->height() << "\n";
    }
    save_chain_clock(s.chain_dir, now_ms);
  }

  std::cout << record.to_json().dump() << "\n";
  if (record.pending_anchor) {
    std::cerr << "chain unreachable; anchor pending, retry later\n";
    return kExitChainDown;
  }
  return 0;
}

int cmd_verify(const std::string& config_path, const std::string& record_path) {
  NodeSettings s = load_settings(config_path);
  auto identity = load_identity(s.identity_key_file);
  auto record = pipeline::AnchorRecord::from_json(load_json_file(record_path));
  OpenStore open = open_disk_store(s, identity, resolve_store_address(s, identity));

  std::unique_ptr<chain::Chain> embedded;
  std::unique_ptr<pipeline::ChainAccess> chain_access;
  if (s.chain_endpoint == "embedded") {
    embedded = open_embedded_chain(s);
    uint64_t now_ms = load_chain_clock(s.chain_dir);
    chain_access = std::make_unique<pipeline::LocalChainAccess>(*embedded,
                                                                [now_ms] { return now_ms; });
  } else {
    chain_access = std::make_unique<pipeline::RemoteChainAccess>(s.chain_endpoint);
  }

  pipeline::VerificationReport report = pipeline::verify_inventory(record, *open.store,
                                                                   *chain_access);
  std::cout << report.to_json().dump() << "\n";
  switch (report.status) {
    case pipeline::VerifyStatus::Verified: return 0;
    case pipeline::VerifyStatus::Mismatch: return kExitMismatch;
    case pipeline::VerifyStatus::Pending: return kExitPending;
    case pipeline::VerifyStatus::MissingAnchor: return kExitMissingAnchor;
  }
  return kExitMismatch;
}

int cmd_bench(const std::string& scenario_path, const std::string& out_csv,
              const std::string& fit_family) {
  if (!fs::exists(scenario_path)) {
    std::cerr << "unknown scenario: " << scenario_path << "\n";
    return kExitUsage;
  }
  auto cfg = bench::ScenarioConfig::from_json(load_json_file(scenario_path));
  auto log = std::make_shared<oplog::Log>("bench-" + cfg.name,
                                          std::make_shared<blockstore::MemoryBlockStore>(),
                                          crypto::KeyPair::generate());
  stores::Store store(stores::StoreKind::eventlog, log);
  auto samples = bench::run_scenario(cfg, store);

  fs::path csv = out_csv.empty() ? fs::path("scenario_" + cfg.name + "_latency.csv")
                                 : fs::path(out_csv);
  bench::write_csv(csv, samples);
  std::cerr << samples.size() << " samples written to " << csv.string() << "\n";

  auto latencies = bench::latencies_of(samples);
  json report;
  report["scenario"] = cfg.name;
  report["n_requests"] = cfg.n_requests;
  report["summary"] = bench::summary_to_json(stats::summarize(latencies));
  if (fit_family != "none" && latencies.size() < 100) {
    std::cerr << "warning: fitting on only " << latencies.size() << " samples\n";
  }
  if (fit_family == "gev" || fit_family == "both") {
    report["gev_fit"] = bench::fit_gev_result(latencies).to_json();
  }
  if (fit_family == "kernel" || fit_family == "both") {
    report["kernel_fit"] = bench::fit_kernel_result(latencies).to_json();
  }
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_status(const std::vector<std::string>& data_dirs) {
  json out;
  out["data_dirs"] = data_dirs;
  json logs = json::object();
  for (const auto& dir : data_dirs) {
    fs::path heads_dir = node::TcpNode::heads_dir(dir);
    if (!fs::exists(heads_dir)) continue;
    for (const auto& file : fs::directory_iterator(heads_dir)) {
      std::string name = file.path().filename().string();
      auto pos = name.find(".heads.json");
      if (pos == std::string::npos) continue;
      std::string address = name.substr(0, pos);
      json heads = json::array();
      for (const auto& cid : oplog::Log::read_heads_file(heads_dir, address)) {
        heads.push_back(cid.hex());
      }
      logs[address][dir] = std::move(heads);
    }
  }
  out["logs"] = logs;

  // Convergence report over the listed nodes, one verdict per log address.
  bool all_converged = true;
  json per_log = json::object();
  for (const auto& [address, by_dir] : logs.items()) {
    bool converged = true;
    const json* first = nullptr;
    for (const auto& [_, heads] : by_dir.items()) {
      if (!first) {
        first = &heads;
      } else if (*first != heads) {
        converged = false;
      }
    }
    if (data_dirs.size() > 1 && by_dir.size() != data_dirs.size()) converged = false;
    per_log[address] = converged;
    all_converged = all_converged && converged;
  }
  out["converged_per_log"] = per_log;
  out["converged"] = data_dirs.size() > 1 ? json(all_converged) : json(nullptr);

  for (const auto& dir : data_dirs) {
    fs::path chain_dir = fs::path(dir) / "chain";
    if (fs::exists(chain_dir / "blocks.jsonl")) {
      std::ifstream in(chain_dir / "blocks.jsonl");
      std::string line, last;
      uint64_t height = 0;
      while (std::getline(in, line)) {
        if (!line.empty()) {
          last = line;
          ++height;
        }
      }
      json chain_doc;
      chain_doc["height"] = height == 0 ? 0 : height - 1;  // genesis is line one
      if (!last.empty()) {
        json block = json::parse(last, nullptr, false);
        if (!block.is_discarded()) chain_doc["head_hash"] = block.value("block_hash", "");
      }
      chain_doc["clock_ms"] = load_chain_clock(chain_dir);
      out["chain"][dir] = std::move(chain_doc);
    }
  }

  std::cout << out.dump() << "\n";
  if (data_dirs.size() > 1 && !all_converged) return kExitPending;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV inventory over a replicated content-addressed store with chain anchoring"};
  app.require_subcommand(1);

  // node run
  auto* node_cmd = app.add_subcommand("node", "node operations");
  node_cmd->require_subcommand(1);
  auto* run_cmd = node_cmd->add_subcommand("run", "run a replication node");
  std::string node_config;
  run_cmd->add_option("--config", node_config, "node config JSON")->required();

  // flight
  auto* flight_cmd = app.add_subcommand("flight", "simulate an inventory flight");
  std::string layout_path, path_path, params_path, curve_out, trace_tag, trace_out;
  uint64_t flight_seed = 1;
  flight_cmd->add_option("--layout", layout_path, "tag layout JSON")->required();
  flight_cmd->add_option("--path", path_path, "flight path JSON")->required();
  flight_cmd->add_option("--params", params_path, "reader params JSON")->required();
  flight_cmd->add_option("--seed", flight_seed, "simulation seed");
  flight_cmd->add_option("--curve", curve_out, "write the cumulative read curve CSV here");
  flight_cmd->add_option("--trace", trace_tag, "also export this tag's SSI trace CSV");
  flight_cmd->add_option("--trace-out", trace_out, "SSI trace CSV path");

  // insert
  auto* insert_cmd = app.add_subcommand("insert", "insert a snapshot and anchor it");
  std::string insert_config, snapshot_path;
  bool mine = false;
  insert_cmd->add_option("--config", insert_config, "node config JSON")->required();
  insert_cmd->add_option("--snapshot", snapshot_path, "snapshot JSON file")->required();
  insert_cmd->add_flag("--mine", mine, "advance the embedded chain past the next block");
  bool hash_only = false;
  insert_cmd->add_flag("--hash-only", hash_only, "anchor only the snapshot digest on chain");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "verify an anchored snapshot");
  std::string verify_config, record_path;
  verify_cmd->add_option("--config", verify_config, "node config JSON")->required();
  verify_cmd->add_option("--record", record_path, "anchor record JSON file")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run a latency scenario");
  std::string scenario_path, out_csv, fit_family = "none";
  bench_cmd->add_option("--scenario", scenario_path, "scenario config JSON")->required();
  bench_cmd->add_option("--out", out_csv, "latency CSV output path");
  bench_cmd->add_option("--fit", fit_family, "fit family: gev | kernel | both")
      ->check(CLI::IsMember({"none", "gev", "kernel", "both"}));

  // status
  auto* status_cmd = app.add_subcommand("status", "report node state and convergence");
  std::vector<std::string> data_dirs;
  status_cmd->add_option("--data-dir", data_dirs, "node data directory (repeatable)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_node_run(node_config);
    if (flight_cmd->parsed()) {
      return cmd_flight(layout_path, path_path, params_path, flight_seed, curve_out, trace_tag,
                        trace_out);
    }
    if (insert_cmd->parsed()) return cmd_insert(insert_config, snapshot_path, mine, hash_only);
    if (verify_cmd->parsed()) return cmd_verify(verify_config, record_path);
    if (bench_cmd->parsed()) return cmd_bench(scenario_path, out_csv, fit_family);
    if (status_cmd->parsed()) return cmd_status(data_dirs);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  }
  return kExitUsage;
}
