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

#include <filesystem>
#include <string>
#include <vector>

#include "skytrace/gev.hpp"
#include "skytrace/stats.hpp"
#include "skytrace/stores.hpp"
#include "skytrace/swarm.hpp"

namespace skytrace::bench {

// Synthetic per-request service time: one GEV draw plus a linear per-byte
// term, standing in for the store's processing cost so the measurement
// workflow runs end to end at desk scale.
struct ServiceModel {
  gev::GevParams gev_s{0.143, 0.02, 0.1};  // seconds
  double per_byte_s = 4.8e-7;

  static ServiceModel from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct ScenarioConfig {
  std::string name;
  uint32_t n_tags = 13;
  size_t payload_bytes = 1024;
  uint32_t n_requests = 2000;
  uint64_t seed = 0;
  swarm::NetworkModel network;
  ServiceModel service;

  static ScenarioConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct LatencySample {
  uint32_t request_index = 0;
  double latency_s = 0.0;
};

// Issues n_requests eventlog inserts against `store` under a virtual clock;
// each latency is one-way delay + service + one-way delay, measured request
// issue to orbit-hash receipt. Samples come back in request order. A store
// failure aborts the run, returning the samples measured so far.
std::vector<LatencySample> run_scenario(const ScenarioConfig& config, stores::Store& store);

// Inventory-shaped filler of exactly `target_bytes` bytes.
std::string synth_payload(uint32_t n_tags, size_t target_bytes);

enum class FitFamily { GEV, Kernel };

struct FitResult {
  FitFamily family = FitFamily::GEV;
  gev::GevParams gev;
  gev::KernelFit kernel;
  double log_likelihood = 0.0;

  nlohmann::json to_json() const;
};

FitResult fit_gev_result(const std::vector<double>& latencies);
FitResult fit_kernel_result(const std::vector<double>& latencies, double bandwidth = 0.0);
std::vector<double> monte_carlo(const FitResult& fit, size_t n, uint64_t seed);

std::vector<double> latencies_of(const std::vector<LatencySample>& samples);

void write_csv(const std::filesystem::path& path, const std::vector<LatencySample>& samples);
std::vector<LatencySample> read_csv(const std::filesystem::path& path);

nlohmann::json summary_to_json(const stats::SummaryStats& stats);

}  // namespace skytrace::bench
