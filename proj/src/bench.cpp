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

#include "skytrace/bench.hpp"

#include <fstream>

namespace skytrace::bench {

using nlohmann::json;

ServiceModel ServiceModel::from_json(const json& doc) {
  ServiceModel m;
  if (doc.contains("gev")) {
    const auto& g = doc.at("gev");
    m.gev_s.location = g.at("location_s").get<double>();
    m.gev_s.scale = g.at("scale_s").get<double>();
    m.gev_s.shape = g.at("shape").get<double>();
  }
  m.per_byte_s = doc.value("per_byte_s", m.per_byte_s);
  return m;
}

json ServiceModel::to_json() const {
  return {{"gev",
           {{"location_s", gev_s.location}, {"scale_s", gev_s.scale}, {"shape", gev_s.shape}}},
          {"per_byte_s", per_byte_s}};
}

ScenarioConfig ScenarioConfig::from_json(const json& doc) {
  ScenarioConfig cfg;
  cfg.name = doc.at("name").get<std::string>();
  cfg.n_tags = doc.value("n_tags", cfg.n_tags);
  cfg.payload_bytes = doc.at("payload_bytes").get<size_t>();
  cfg.n_requests = doc.at("n_requests").get<uint32_t>();
  cfg.seed = doc.value("seed", cfg.seed);
  if (cfg.n_requests == 0) throw std::invalid_argument("n_requests must be positive");
  cfg.network = swarm::NetworkModel::from_json(doc.at("network"));
  if (doc.contains("service")) cfg.service = ServiceModel::from_json(doc.at("service"));
  return cfg;
}

json ScenarioConfig::to_json() const {
  json doc;
  doc["name"] = name;
  doc["n_tags"] = n_tags;
  doc["payload_bytes"] = payload_bytes;
  doc["n_requests"] = n_requests;
  doc["seed"] = seed;
  doc["network"] = network.to_json();
  doc["service"] = service.to_json();
  return doc;
}

std::string synth_payload(uint32_t n_tags, size_t target_bytes) {
  std::string out = "{\"v\":1,\"n_tags\":" + std::to_string(n_tags) + ",\"ids\":[";
  size_t i = 0;
  while (out.size() + 32 < target_bytes) {
    if (i > 0) out.push_back(',');
    char buf[24];
    std::snprintf(buf, sizeof(buf), "\"LOCATE%08zu\"", i++);
    out += buf;
  }
  out += "],\"pad\":\"";
  if (out.size() + 2 > target_bytes) {
    throw std::invalid_argument("target payload too small: " + std::to_string(target_bytes));
  }
  out.append(target_bytes - out.size() - 2, 'x');
  out += "\"}";
  return out;
}

std::vector<LatencySample> run_scenario(const ScenarioConfig& config, stores::Store& store) {
  Rng rng(config.seed);
  std::string payload = synth_payload(config.n_tags, config.payload_bytes);
  json payload_value = payload;

  std::vector<LatencySample> samples;
  samples.reserve(config.n_requests);
  for (uint32_t i = 0; i < config.n_requests; ++i) {
    double up_s = config.network.sample_delay_ms(rng) / 1000.0;
    double down_s = config.network.sample_delay_ms(rng) / 1000.0;
    double u = std::min(std::max(rng.uniform(), 1e-15), 1.0 - 1e-15);
    double service_s = gev::gev_quantile(config.service.gev_s, u) +
                       config.service.per_byte_s * static_cast<double>(payload.size());

    try {
      store.log_add(payload_value);  // the insert itself
    } catch (const oplog::StorageFailure&) {
      break;  // abort, keeping the samples measured so far
    }

    LatencySample sample;
    sample.request_index = i;
    sample.latency_s = up_s + service_s + down_s;
    samples.push_back(sample);
  }
  return samples;
}

std::vector<double> latencies_of(const std::vector<LatencySample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const LatencySample& s : samples) out.push_back(s.latency_s);
  return out;
}

FitResult fit_gev_result(const std::vector<double>& latencies) {
  FitResult result;
  result.family = FitFamily::GEV;
  result.gev = gev::fit_gev(latencies);
  result.log_likelihood = -gev::gev_neg_log_likelihood(result.gev, latencies);
  return result;
}

FitResult fit_kernel_result(const std::vector<double>& latencies, double bandwidth) {
  FitResult result;
  result.family = FitFamily::Kernel;
  result.kernel = gev::fit_kernel(latencies, bandwidth);
  result.log_likelihood = result.kernel.log_likelihood();
  return result;
}

std::vector<double> monte_carlo(const FitResult& fit, size_t n, uint64_t seed) {
  if (fit.family == FitFamily::GEV) return gev::gev_sample(fit.gev, n, seed);
  return gev::kernel_sample(fit.kernel, n, seed);
}

json FitResult::to_json() const {
  json doc;
  if (family == FitFamily::GEV) {
    doc["family"] = "GEV";
    doc["location"] = gev.location;
    doc["scale"] = gev.scale;
    doc["shape"] = gev.shape;
  } else {
    doc["family"] = "Kernel";
    doc["bandwidth"] = kernel.bandwidth;
    doc["n_samples"] = kernel.samples.size();
  }
  doc["log_likelihood"] = log_likelihood;
  return doc;
}

void write_csv(const std::filesystem::path& path, const std::vector<LatencySample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "request_index,latency_s\n";
  char buf[64];
  for (const LatencySample& s : samples) {
    std::snprintf(buf, sizeof(buf), "%u,%.9f\n", s.request_index, s.latency_s);
    out << buf;
  }
}

std::vector<LatencySample> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<LatencySample> samples;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    samples.push_back({static_cast<uint32_t>(std::stoul(line.substr(0, comma))),
                       std::stod(line.substr(comma + 1))});
  }
  return samples;
}

json summary_to_json(const stats::SummaryStats& stats) {
  return {{"mean_s", stats.mean},  {"variance_s2", stats.variance}, {"min_s", stats.min},
          {"max_s", stats.max},    {"p50_s", stats.p50},            {"p95_s", stats.p95},
          {"p99_s", stats.p99}};
}

}  // namespace skytrace::bench
