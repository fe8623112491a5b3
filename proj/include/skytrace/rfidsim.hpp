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

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skytrace/rng.hpp"

namespace skytrace::rfidsim {

using nlohmann::json;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

// Material presets for tag attenuation, in dB.
double material_attenuation_db(const std::string& material);  // throws on unknown

struct TagSpec {
  std::string tag_id;
  Vec3 position;
  double attenuation_db = 0.0;
};

struct Waypoint {
  Vec3 position;
  double arrival_ms = 0.0;
};

struct FlightPath {
  std::vector<Waypoint> waypoints;  // arrival times strictly increasing
  std::string takeoff;              // "HH:MM:SS,mmm"
  double area_x_m = 50.0;
  double area_y_m = 40.0;

  void validate() const;  // throws std::invalid_argument
  Vec3 position_at(double t_ms) const;
  double duration_ms() const;
};

struct TimeInterval {
  double lo_ms = 0.0;
  double hi_ms = 0.0;
};

struct Box {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const;
};

// Log-distance path loss with Gaussian shadowing. Defaults put the mean at
// -40 dBm one meter out and the 10-40 m band between roughly -60 and -72 dBm,
// of which only samples above the threshold become reads.
struct ReaderParams {
  double reference_power_dbm = -40.0;  // at 1 m
  double path_loss_exponent = 2.0;
  double noise_sigma_db = 1.5;
  double threshold_dbm = -63.0;
  double read_period_ms = 500.0;
  std::vector<TimeInterval> blockage_intervals;
  std::vector<Box> blockage_boxes;

  void validate() const;
};

struct TagRead {
  std::string tag_id;
  double t_ms = 0.0;  // since takeoff
  double ssi_dbm = 0.0;
};

struct SnapshotRow {
  uint32_t seq = 0;       // 1-based
  double pct_read = 0.0;  // 100 * seq / total_tags
  std::string timestamp;  // "HH:MM:SS,mmm"
  std::string tag_id;
};

struct InventorySnapshot {
  std::string takeoff;
  uint32_t total_tags = 0;
  std::vector<SnapshotRow> rows;
};

struct UnknownTag : std::runtime_error {
  explicit UnknownTag(const std::string& id) : std::runtime_error("no samples for tag " + id) {}
};

// "HH:MM:SS,mmm" <-> milliseconds since midnight (wraps at 24 h).
double parse_clock_ms(const std::string& text);  // throws std::invalid_argument
std::string render_clock_ms(double ms_since_midnight);

// One propagation sample. Absent when suppressed by a blockage zone or below
// the detection threshold; the noise draw happens either way so the rng
// stream is one draw per call.
std::optional<double> rssi_at(const Vec3& reader_pos, double t_ms, const TagSpec& tag,
                              const ReaderParams& params, Rng& rng);

// Every sampling round evaluates every tag in layout order, so a fixed seed
// reproduces the exact event list.
std::vector<TagRead> simulate_flight(const std::vector<TagSpec>& layout, const FlightPath& path,
                                     const ReaderParams& params, uint64_t seed);

InventorySnapshot snapshot_from_reads(const std::vector<TagRead>& reads,
                                      const std::string& takeoff, uint32_t total_tags);

std::vector<TagRead> ssi_trace(const std::vector<TagRead>& reads, const std::string& tag_id);

// Cumulative first-detection curve as (t_ms, pct) points, one per new tag.
std::vector<std::pair<double, double>> cumulative_curve(const std::vector<TagRead>& reads,
                                                        uint32_t total_tags);

std::vector<TagSpec> layout_from_json(const json& doc);
FlightPath path_from_json(const json& doc);
ReaderParams params_from_json(const json& doc);
json snapshot_to_json_rows(const InventorySnapshot& snapshot);  // parsed-form mirror

}  // namespace skytrace::rfidsim
