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

#include <unistd.h>

#include <filesystem>

#include "doctest.h"
#include "skytrace/chain.hpp"
#include "skytrace/rng.hpp"

using namespace skytrace;
using namespace skytrace::chain;

namespace fs = std::filesystem;

namespace {

ChainConfig poa_config(uint64_t interval_ms = 15000) {
  ChainConfig cfg;
  cfg.policy = MintPolicy::poa(interval_ms);
  cfg.auth_token = "token";
  return cfg;
}

}  // namespace

TEST_CASE("fixed-point fee parsing and rendering") {
  Fixed8 fee = Fixed8::parse("0.03521346");
  CHECK(fee.units == 3521346);
  CHECK(fee.str() == "0.03521346");
  CHECK(Fixed8::parse("2").str() == "2.00000000");
  CHECK(Fixed8::parse("2.5").units == 250000000);
  CHECK_THROWS(Fixed8::parse("0.123456789"));  // more than 8 digits
}

TEST_CASE("deploy gives a fresh usable contract with empty state") {
  Chain chain(poa_config());
  std::string a1 = chain.deploy_contract("0xdeployer", 0);
  std::string a2 = chain.deploy_contract("0xdeployer", 0);
  CHECK(a1 != a2);
  CHECK(chain.get_data(a1) == std::pair<std::string, std::string>{"", ""});

  chain.mint_step(15000);
  CHECK(chain.height() == 1);  // usable after one interval
  CHECK(chain.get_data(a1) == std::pair<std::string, std::string>{"", ""});
}

TEST_CASE("set_data: token gate, staleness until mined, order within a block") {
  Chain chain(poa_config());
  std::string addr = chain.deploy_contract("0xdeployer", 0);

  SUBCASE("roundtrip after mining") {
    std::string tx = chain.set_data(addr, "data-v1", "hash-v1", "token", 100);
    CHECK(chain.get_data(addr) == std::pair<std::string, std::string>{"", ""});  // stale
    chain.mint_step(15000);
    CHECK(chain.get_data(addr) == std::pair<std::string, std::string>{"data-v1", "hash-v1"});
    Receipt r = chain.tx_receipt(tx);
    CHECK_FALSE(r.pending);
    CHECK(r.block_number == 1);
    CHECK(r.latency_ms == 15000 - 100);
  }

  SUBCASE("invalid token leaves the pool untouched") {
    size_t before = chain.pending_count();
    CHECK_THROWS_AS(chain.set_data(addr, "d", "h", "wrong", 0), AuthError);
    CHECK(chain.pending_count() == before);
  }

  SUBCASE("two writes in one block: the later one wins") {
    chain.set_data(addr, "first", "h1", "token", 100);
    chain.set_data(addr, "second", "h2", "token", 200);
    chain.mint_step(15000);
    CHECK(chain.get_data(addr) == std::pair<std::string, std::string>{"second", "h2"});
  }

  SUBCASE("oversized calldata is refused") {
    std::string big(200 * 1024, 'x');
    CHECK_THROWS_AS(chain.set_data(addr, big, "h", "token", 0), PayloadTooLarge);
  }

  SUBCASE("unknown contract and unknown tx") {
    CHECK_THROWS_AS(chain.get_data("0xnothere"), UnknownContract);
    CHECK_THROWS_AS(chain.set_data("0xnothere", "d", "h", "token", 0), UnknownContract);
    CHECK_THROWS_AS(chain.tx_receipt("deadbeef"), UnknownTransaction);
  }
}

TEST_CASE("PoA mints exactly on schedule, empty blocks included") {
  Chain chain(poa_config(15000));
  auto blocks = chain.mint_step(60000);
  CHECK(blocks.size() == 4);  // 15, 30, 45, 60 s
  CHECK(blocks[0].timestamp_ms == 15000);
  CHECK(blocks[3].timestamp_ms == 60000);
  CHECK(chain.mint_step(60000).empty());  // nothing new at the same instant
}

TEST_CASE("PoA latency bound and uniform-phase mean") {
  Chain chain(poa_config(15000));
  std::string addr = chain.deploy_contract("0xd", 0);
  Rng rng(2024);
  std::vector<std::string> hashes;
  constexpr int n = 10000;
  constexpr uint64_t horizon = 150000;  // ten intervals
  for (int i = 0; i < n; ++i) {
    uint64_t at = rng.uniform_u64(horizon);
    hashes.push_back(chain.set_data(addr, "d", "h", "token", at));
  }
  chain.mint_step(horizon + 15000);
  double acc = 0.0;
  for (const auto& h : hashes) {
    Receipt r = chain.tx_receipt(h);
    REQUIRE_FALSE(r.pending);
    CHECK(r.latency_ms <= 15000);
    acc += static_cast<double>(r.latency_ms);
  }
  double mean_s = acc / n / 1000.0;
  CHECK(mean_s == doctest::Approx(7.5).epsilon(0.2 / 7.5));  // 7.5 s ± 0.2 s
}

TEST_CASE("PoW uniform sampler: latencies within support, mean near 41 s") {
  ChainConfig cfg;
  cfg.policy = MintPolicy::pow_uniform(2000.0, 80000.0);
  cfg.auth_token = "token";
  cfg.seed = 7;
  Chain chain(cfg);
  std::string addr = chain.deploy_contract("0xd", 0);
  constexpr int n = 10000;
  std::vector<std::string> hashes;
  for (int i = 0; i < n; ++i) {
    hashes.push_back(chain.set_data(addr, "d", "h", "token", 0));
  }
  chain.mint_step(100000000);
  double acc = 0.0;
  for (const auto& h : hashes) {
    Receipt r = chain.tx_receipt(h);
    REQUIRE_FALSE(r.pending);
    CHECK(r.latency_ms >= 2000);
    CHECK(r.latency_ms <= 80000);
    acc += static_cast<double>(r.latency_ms);
  }
  double mean_s = acc / n / 1000.0;
  CHECK(mean_s == doctest::Approx(41.0).epsilon(2.0 / 41.0));  // 41 s ± 2 s
}

TEST_CASE("PoW default sampler spans below 5 s and above 70 s over ~100 txs") {
  ChainConfig cfg;
  cfg.policy = MintPolicy::pow_default();
  cfg.auth_token = "token";
  cfg.seed = 20190522;
  Chain chain(cfg);
  std::string addr = chain.deploy_contract("0xd", 0);
  std::vector<std::string> hashes;
  for (int i = 0; i < 100; ++i) hashes.push_back(chain.set_data(addr, "d", "h", "token", 0));
  chain.mint_step(1000000000);
  bool below_5s = false, above_70s = false;
  for (const auto& h : hashes) {
    Receipt r = chain.tx_receipt(h);
    if (r.latency_ms < 5000) below_5s = true;
    if (r.latency_ms > 70000) above_70s = true;
  }
  CHECK(below_5s);
  CHECK(above_70s);
  CHECK(chain.pending_count() == 0);
}

TEST_CASE("PoW suppresses empty blocks") {
  ChainConfig cfg;
  cfg.policy = MintPolicy::pow_default();
  Chain chain(cfg);
  CHECK(chain.mint_step(1000000).empty());
  CHECK(chain.height() == 0);
}

TEST_CASE("fee accounting is exact") {
  Chain chain(poa_config());
  std::string addr = chain.deploy_contract("0xd", 0);
  for (int i = 0; i < 99; ++i) chain.set_data(addr, "d", "h", "token", 0);
  chain.mint_step(15000);
  // 1 deploy + 99 setData, all mined
  CHECK(chain.total_fees().units == 100 * kDefaultFeeE8);
  CHECK(chain.total_fees().str() == "3.52134600");
}

TEST_CASE("determinism: same seed, policy and schedule give identical chains") {
  auto run = [] {
    ChainConfig cfg;
    cfg.policy = MintPolicy::pow_default();
    cfg.seed = 31337;
    Chain chain(cfg);
    std::string addr = chain.deploy_contract("0xd", 5);
    for (int i = 0; i < 50; ++i) chain.set_data(addr, "d" + std::to_string(i), "h", "secret", 10 * i);
    chain.mint_step(10000000);
    return chain.head_hash();
  };
  CHECK(run() == run());
}

TEST_CASE("timestamps are non-decreasing and replay reproduces the state") {
  ChainConfig cfg;
  cfg.policy = MintPolicy::pow_default();
  cfg.seed = 11;
  Chain chain(cfg);
  std::string addr = chain.deploy_contract("0xd", 0);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    chain.set_data(addr, "d" + std::to_string(i), "h" + std::to_string(i), "secret",
                   rng.uniform_u64(50000));
    if (i % 20 == 0) chain.mint_step(rng.uniform_u64(200000));
  }
  chain.mint_step(100000000);
  uint64_t last = 0;
  for (const ChainBlock& b : chain.blocks()) {
    CHECK(b.timestamp_ms >= last);
    last = b.timestamp_ms;
  }
  CHECK_NOTHROW(chain.replay_verify());
}

TEST_CASE("persistence: reload equals live chain") {
  fs::path dir = fs::temp_directory_path() / ("skytrace_chain_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  {
    Chain chain(poa_config());
    chain.persist_to(dir);
    std::string addr = chain.deploy_contract("0xd", 0);
    chain.set_data(addr, "persisted", "hash", "token", 100);
    chain.mint_step(15000);
    chain.set_data(addr, "still-pending", "hash2", "token", 16000);

    auto reloaded = Chain::load(dir, poa_config());
    CHECK(reloaded->height() == chain.height());
    CHECK(reloaded->head_hash() == chain.head_hash());
    CHECK(reloaded->pending_count() == 1);
    CHECK(reloaded->get_data(addr) == chain.get_data(addr));
    CHECK(reloaded->total_fees().units == chain.total_fees().units);

    // pending tx mines identically after reload
    reloaded->mint_step(30000);
    CHECK(reloaded->get_data(addr) ==
          std::pair<std::string, std::string>{"still-pending", "hash2"});
  }
  fs::remove_all(dir);
}

TEST_CASE("request handler speaks the framed-JSON schema") {
  Chain chain(poa_config());
  std::string addr = chain.deploy_contract("0xd", 0);

  nlohmann::json ok = handle_request(
      chain,
      {{"type", "SET_DATA"}, {"address", addr}, {"inventory_data", "d"}, {"orbit_hash", "h"},
       {"token", "token"}},
      50);
  CHECK(ok["ok"] == true);
  CHECK(ok.contains("tx_hash"));

  nlohmann::json bad_tok = handle_request(
      chain,
      {{"type", "SET_DATA"}, {"address", addr}, {"inventory_data", "d"}, {"orbit_hash", "h"},
       {"token", "nope"}},
      50);
  CHECK(bad_tok["ok"] == false);
  CHECK(bad_tok["error"] == "AuthError");

  chain.mint_step(15000);
  nlohmann::json got = handle_request(chain, {{"type", "GET_DATA"}, {"address", addr}}, 0);
  CHECK(got["inventory_data"] == "d");

  nlohmann::json rec =
      handle_request(chain, {{"type", "RECEIPT"}, {"tx_hash", ok["tx_hash"]}}, 0);
  CHECK(rec["pending"] == false);

  nlohmann::json status = handle_request(chain, {{"type", "STATUS"}}, 0);
  CHECK(status["height"] == 1);
  CHECK(status["contracts"][0] == addr);

  nlohmann::json junk = handle_request(chain, {{"type", "EXPLODE"}}, 0);
  CHECK(junk["ok"] == false);
}
