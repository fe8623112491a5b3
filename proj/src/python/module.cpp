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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "skytrace/bench.hpp"
#include "skytrace/chain.hpp"
#include "skytrace/gev.hpp"
#include "skytrace/pipeline.hpp"
#include "skytrace/rfidsim.hpp"
#include "skytrace/sha256.hpp"
#include "skytrace/stores.hpp"

namespace py = pybind11;
using namespace skytrace;
using nlohmann::json;

namespace {

crypto::KeyPair keypair_from_hex(const std::string& seed_hex) {
  Bytes raw = from_hex(seed_hex);
  if (raw.size() != 32) throw std::invalid_argument("seed must be 32 hex bytes");
  crypto::SecretSeed seed{};
  std::copy(raw.begin(), raw.end(), seed.begin());
  return crypto::KeyPair::from_seed(seed);
}

// A store handle over an in-memory log, enough to drive the data model from
// python without the node machinery.
struct PyStore {
  std::shared_ptr<oplog::Log> log;
  std::unique_ptr<stores::Store> store;

  PyStore(const std::string& kind, const std::string& address, const std::string& seed_hex) {
    log = std::make_shared<oplog::Log>(address, std::make_shared<blockstore::MemoryBlockStore>(),
                                       keypair_from_hex(seed_hex));
    store = std::make_unique<stores::Store>(stores::kind_from_name(kind), log);
  }

  std::string append_json_op(const std::string& method, const std::string& arg1,
                             const std::string& arg2) {
    using stores::StoreKind;
    if (method == "log_add") return store->log_add(json::parse(arg1)).hex();
    if (method == "feed_add") return store->feed_add(json::parse(arg1)).hex();
    if (method == "feed_remove") return store->feed_remove(blockstore::Cid::parse(arg1)).hex();
    if (method == "kv_put") return store->kv_put(arg1, json::parse(arg2)).hex();
    if (method == "kv_del") return store->kv_del(arg1).hex();
    if (method == "doc_put") return store->doc_put(json::parse(arg1)).hex();
    if (method == "doc_del") return store->doc_del(arg1).hex();
    if (method == "counter_inc") return store->counter_inc(std::stoll(arg1)).hex();
    throw std::invalid_argument("unknown store method: " + method);
  }

  py::object kv_get(const std::string& key) {
    auto value = store->kv_get(key);
    if (!value) return py::none();
    return py::str(value->dump());
  }

  py::object doc_get(const std::string& id) {
    auto value = store->doc_get(id);
    if (!value) return py::none();
    return py::str(value->dump());
  }

  std::vector<std::string> doc_query(const std::string& prefix) {
    std::vector<std::string> out;
    for (const auto& doc : store->doc_query(prefix)) out.push_back(doc.dump());
    return out;
  }

  int64_t counter_value() { return store->counter_value(); }

  std::vector<std::string> heads() {
    std::vector<std::string> out;
    for (const auto& cid : log->heads()) out.push_back(cid.hex());
    return out;
  }

  size_t size() { return log->size(); }

  std::vector<py::bytes> export_entries() {
    std::vector<py::bytes> out;
    for (const auto& e : log->traverse()) {
      Bytes wire = e.serialized();
      out.emplace_back(reinterpret_cast<const char*>(wire.data()), wire.size());
    }
    return out;
  }

  py::dict join(const std::vector<py::bytes>& entries) {
    std::vector<oplog::Entry> parsed;
    size_t malformed = 0;
    for (const auto& b : entries) {
      std::string raw = b;
      try {
        parsed.push_back(
            oplog::Entry::parse(BytesView(reinterpret_cast<const uint8_t*>(raw.data()),
                                          raw.size())));
      } catch (const oplog::MalformedEntry&) {
        ++malformed;
      }
    }
    oplog::JoinReport report = log->join(parsed);
    py::dict out;
    out["added"] = report.added;
    out["already_known"] = report.already_known;
    out["bad_signature"] = report.bad_signature;
    out["malformed"] = report.malformed + malformed;
    out["quarantined"] = report.quarantined;
    return out;
  }
};

struct PyChain {
  std::unique_ptr<chain::Chain> chain_state;

  explicit PyChain(const std::string& config_json) {
    chain_state = std::make_unique<chain::Chain>(
        chain::ChainConfig::from_json(json::parse(config_json)));
  }

  std::string deploy(const std::string& deployer, uint64_t now_ms) {
    return chain_state->deploy_contract(deployer, now_ms);
  }
  std::string set_data(const std::string& address, const std::string& data,
                       const std::string& orbit_hash, const std::string& token,
                       uint64_t now_ms) {
    return chain_state->set_data(address, data, orbit_hash, token, now_ms);
  }
  py::tuple get_data(const std::string& address) {
    auto [data, hash] = chain_state->get_data(address);
    return py::make_tuple(data, hash);
  }
  size_t mint_step(uint64_t now_ms) { return chain_state->mint_step(now_ms).size(); }
  py::dict receipt(const std::string& tx_hash) {
    chain::Receipt r = chain_state->tx_receipt(tx_hash);
    py::dict out;
    out["pending"] = r.pending;
    out["block_number"] = r.block_number;
    out["latency_ms"] = r.latency_ms;
    return out;
  }
  uint64_t height() { return chain_state->height(); }
  std::string total_fees() { return chain_state->total_fees().str(); }
  std::string head_hash() { return chain_state->head_hash(); }
};

}  // namespace

PYBIND11_MODULE(_skytrace, m) {
  m.doc() = "UAV inventory pipeline: content-addressed store, CRDT log, chain anchoring, "
            "flight simulation and latency statistics";

  m.def("sha256_hex", [](py::bytes data) {
    std::string raw = data;
    return to_hex(sha256(BytesView(reinterpret_cast<const uint8_t*>(raw.data()), raw.size())));
  });

  m.def("derive_log_address",
        [](const std::string& kind, const std::string& seed_hex, const std::string& name) {
          return oplog::derive_log_address(kind, keypair_from_hex(seed_hex).pub, name);
        });

  py::class_<PyStore>(m, "Store")
      .def(py::init<const std::string&, const std::string&, const std::string&>(),
           py::arg("kind"), py::arg("address"), py::arg("identity_seed_hex"))
      .def("op", &PyStore::append_json_op, py::arg("method"), py::arg("arg1") = "",
           py::arg("arg2") = "")
      .def("kv_get", &PyStore::kv_get)
      .def("doc_get", &PyStore::doc_get)
      .def("doc_query", &PyStore::doc_query)
      .def("counter_value", &PyStore::counter_value)
      .def("heads", &PyStore::heads)
      .def("size", &PyStore::size)
      .def("export_entries", &PyStore::export_entries)
      .def("join", &PyStore::join);

  py::class_<PyChain>(m, "Chain")
      .def(py::init<const std::string&>(), py::arg("config_json") = "{}")
      .def("deploy", &PyChain::deploy, py::arg("deployer"), py::arg("now_ms") = 0)
      .def("set_data", &PyChain::set_data)
      .def("get_data", &PyChain::get_data)
      .def("mint_step", &PyChain::mint_step)
      .def("receipt", &PyChain::receipt)
      .def("height", &PyChain::height)
      .def("total_fees", &PyChain::total_fees)
      .def("head_hash", &PyChain::head_hash);

  m.def("simulate_flight",
        [](const std::string& layout_json, const std::string& path_json,
           const std::string& params_json, uint64_t seed) {
          auto layout = rfidsim::layout_from_json(json::parse(layout_json));
          auto path = rfidsim::path_from_json(json::parse(path_json));
          auto params = rfidsim::params_from_json(json::parse(params_json));
          auto reads = rfidsim::simulate_flight(layout, path, params, seed);
          py::list out;
          for (const auto& r : reads) out.append(py::make_tuple(r.tag_id, r.t_ms, r.ssi_dbm));
          return out;
        },
        py::arg("layout_json"), py::arg("path_json"), py::arg("params_json"), py::arg("seed"));

  m.def("flight_snapshot",
        [](const std::string& layout_json, const std::string& path_json,
           const std::string& params_json, uint64_t seed) {
          auto layout = rfidsim::layout_from_json(json::parse(layout_json));
          auto path = rfidsim::path_from_json(json::parse(path_json));
          auto params = rfidsim::params_from_json(json::parse(params_json));
          auto reads = rfidsim::simulate_flight(layout, path, params, seed);
          auto snapshot = rfidsim::snapshot_from_reads(reads, path.takeoff,
                                                       static_cast<uint32_t>(layout.size()));
          Bytes canonical = pipeline::canonical_snapshot_bytes(snapshot);
          return std::string(canonical.begin(), canonical.end());
        });

  m.def("canonical_snapshot", [](const std::string& snapshot_json) {
    auto snapshot = pipeline::parse_snapshot(json::parse(snapshot_json));
    Bytes canonical = pipeline::canonical_snapshot_bytes(snapshot);
    return std::string(canonical.begin(), canonical.end());
  });

  m.def("gev_pdf", [](double location, double scale, double shape, double x) {
    return gev::gev_pdf({location, scale, shape}, x);
  });
  m.def("gev_cdf", [](double location, double scale, double shape, double x) {
    return gev::gev_cdf({location, scale, shape}, x);
  });
  m.def("gev_quantile", [](double location, double scale, double shape, double p) {
    return gev::gev_quantile({location, scale, shape}, p);
  });
  m.def("gev_sample", [](double location, double scale, double shape, size_t n, uint64_t seed) {
    return gev::gev_sample({location, scale, shape}, n, seed);
  });
  m.def("fit_gev", [](const std::vector<double>& samples) {
    gev::GevParams p = gev::fit_gev(samples);
    return py::make_tuple(p.location, p.scale, p.shape);
  });
  m.def("fit_kernel_bandwidth",
        [](const std::vector<double>& samples) { return gev::fit_kernel(samples).bandwidth; });
  m.def("kernel_pdf", [](const std::vector<double>& samples, double bandwidth, double x) {
    return gev::fit_kernel(samples, bandwidth).pdf(x);
  });

  m.def("summarize", [](const std::vector<double>& samples) {
    stats::SummaryStats s = stats::summarize(samples);
    py::dict out;
    out["mean"] = s.mean;
    out["variance"] = s.variance;
    out["min"] = s.min;
    out["max"] = s.max;
    out["p50"] = s.p50;
    out["p95"] = s.p95;
    out["p99"] = s.p99;
    return out;
  });

  m.def("insert_inventory",
        [](PyStore& store, PyChain& chain, const std::string& contract,
           const std::string& token, uint64_t now_ms, const std::string& snapshot_json,
           bool hash_only) {
          auto snapshot = pipeline::parse_snapshot(json::parse(snapshot_json));
          pipeline::LocalChainAccess access(*chain.chain_state, [now_ms] { return now_ms; });
          pipeline::AnchorRecord record = pipeline::insert_inventory(
              snapshot, *store.store, access, contract, token, now_ms,
              hash_only ? pipeline::AnchorMode::hash_only : pipeline::AnchorMode::full);
          return record.to_json().dump();
        },
        py::arg("store"), py::arg("chain"), py::arg("contract"), py::arg("token"),
        py::arg("now_ms"), py::arg("snapshot_json"), py::arg("hash_only") = false);

  m.def("verify_inventory",
        [](PyStore& store, PyChain& chain, const std::string& record_json) {
          pipeline::AnchorRecord record =
              pipeline::AnchorRecord::from_json(json::parse(record_json));
          pipeline::LocalChainAccess access(*chain.chain_state, [] { return uint64_t{0}; });
          return pipeline::verify_inventory(record, *store.store, access).to_json().dump();
        },
        py::arg("store"), py::arg("chain"), py::arg("record_json"));

  m.def("run_scenario",
        [](const std::string& scenario_json, uint32_t n_requests_override) {
          auto cfg = bench::ScenarioConfig::from_json(json::parse(scenario_json));
          if (n_requests_override > 0) cfg.n_requests = n_requests_override;
          auto log = std::make_shared<oplog::Log>(
              "bench", std::make_shared<blockstore::MemoryBlockStore>(),
              keypair_from_hex(std::string(64, '1')));
          stores::Store store(stores::StoreKind::eventlog, log);
          std::vector<double> latencies;
          for (const auto& s : bench::run_scenario(cfg, store)) {
            latencies.push_back(s.latency_s);
          }
          return latencies;
        },
        py::arg("scenario_json"), py::arg("n_requests_override") = 0);
}
