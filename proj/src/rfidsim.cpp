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

#include "skytrace/rfidsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace skytrace::rfidsim {

double distance(const Vec3& a, const Vec3& b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double material_attenuation_db(const std::string& material) {
  if (material == "cardboard") return 0.5;
  if (material == "plastic") return 1.0;
  if (material == "wood") return 2.0;
  if (material == "none") return 0.0;
  throw std::invalid_argument("unknown material: " + material);
}

void FlightPath::validate() const {
  if (waypoints.empty()) throw std::invalid_argument("flight path has no waypoints");
  for (size_t i = 0; i < waypoints.size(); ++i) {
    const Waypoint& w = waypoints[i];
    if (i > 0 && w.arrival_ms <= waypoints[i - 1].arrival_ms) {
      throw std::invalid_argument("waypoint arrival times must strictly increase");
    }
    if (w.position.x < 0 || w.position.x > area_x_m || w.position.y < 0 ||
        w.position.y > area_y_m || w.position.z < 0) {
      throw std::invalid_argument("waypoint outside the monitored area");
    }
  }
  parse_clock_ms(takeoff);
}

Vec3 FlightPath::position_at(double t_ms) const {
  if (t_ms <= waypoints.front().arrival_ms) return waypoints.front().position;
  if (t_ms >= waypoints.back().arrival_ms) return waypoints.back().position;
  for (size_t i = 1; i < waypoints.size(); ++i) {
    if (t_ms <= waypoints[i].arrival_ms) {
      const Waypoint& a = waypoints[i - 1];
      const Waypoint& b = waypoints[i];
      double f = (t_ms - a.arrival_ms) / (b.arrival_ms - a.arrival_ms);
      return Vec3{a.position.x + f * (b.position.x - a.position.x),
                  a.position.y + f * (b.position.y - a.position.y),
                  a.position.z + f * (b.position.z - a.position.z)};
    }
  }
  return waypoints.back().position;
}

double FlightPath::duration_ms() const {
  return waypoints.back().arrival_ms;
}

bool Box::contains(const Vec3& p) const {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

void ReaderParams::validate() const {
  if (path_loss_exponent <= 0) throw std::invalid_argument("path loss exponent must be > 0");
  if (noise_sigma_db < 0) throw std::invalid_argument("noise sigma must be >= 0");
  if (threshold_dbm >= reference_power_dbm) {
    throw std::invalid_argument("threshold must sit below the reference power");
  }
  if (read_period_ms <= 0) throw std::invalid_argument("read period must be > 0");
}

double parse_clock_ms(const std::string& text) {
  unsigned h = 0, m = 0, s = 0, ms = 0;
  if (std::sscanf(text.c_str(), "%2u:%2u:%2u,%3u", &h, &m, &s, &ms) != 4 || h > 23 || m > 59 ||
      s > 59 || ms > 999) {
    throw std::invalid_argument("timestamp must be HH:MM:SS,mmm: " + text);
  }
  return ((h * 60.0 + m) * 60.0 + s) * 1000.0 + ms;
}

std::string render_clock_ms(double ms_since_midnight) {
  constexpr double kDay = 24.0 * 3600.0 * 1000.0;
  double wrapped = std::fmod(ms_since_midnight, kDay);
  if (wrapped < 0) wrapped += kDay;
  uint64_t total = static_cast<uint64_t>(std::llround(wrapped));
  unsigned ms = total % 1000;
  uint64_t secs = total / 1000;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02u:%02u:%02u,%03u",
                static_cast<unsigned>(secs / 3600 % 24), static_cast<unsigned>(secs / 60 % 60),
                static_cast<unsigned>(secs % 60), ms);
  return buf;
}

std::optional<double> rssi_at(const Vec3& reader_pos, double t_ms, const TagSpec& tag,
                              const ReaderParams& params, Rng& rng) {
  double d = std::max(distance(reader_pos, tag.position), 0.1);
  double mean = params.reference_power_dbm - 10.0 * params.path_loss_exponent * std::log10(d) -
                tag.attenuation_db;
  double value = mean + params.noise_sigma_db * rng.normal();
  for (const TimeInterval& blk : params.blockage_intervals) {
    if (t_ms >= blk.lo_ms && t_ms <= blk.hi_ms) return std::nullopt;
  }
  for (const Box& box : params.blockage_boxes) {
    if (box.contains(reader_pos)) return std::nullopt;
  }
  if (value < params.threshold_dbm) return std::nullopt;
  return value;
}

std::vector<TagRead> simulate_flight(const std::vector<TagSpec>& layout, const FlightPath& path,
                                     const ReaderParams& params, uint64_t seed) {
  if (layout.empty()) throw std::invalid_argument("layout has no tags");
  std::set<std::string> ids;
  for (const TagSpec& tag : layout) {
    if (tag.attenuation_db < 0) throw std::invalid_argument("attenuation must be >= 0");
    if (!ids.insert(tag.tag_id).second) {
      throw std::invalid_argument("duplicate tag id in layout: " + tag.tag_id);
    }
  }
  path.validate();
  params.validate();

  Rng rng(seed);
  std::vector<TagRead> reads;
  for (double t = 0.0; t <= path.duration_ms(); t += params.read_period_ms) {
    Vec3 pos = path.position_at(t);
    for (const TagSpec& tag : layout) {
      if (auto ssi = rssi_at(pos, t, tag, params, rng)) {
        reads.push_back({tag.tag_id, t, *ssi});
      }
    }
  }
  return reads;
}

InventorySnapshot snapshot_from_reads(const std::vector<TagRead>& reads,
                                      const std::string& takeoff, uint32_t total_tags) {
  double takeoff_ms = parse_clock_ms(takeoff);
  std::vector<TagRead> ordered = reads;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const TagRead& a, const TagRead& b) { return a.t_ms < b.t_ms; });

  InventorySnapshot snap;
  snap.takeoff = takeoff;
  snap.total_tags = total_tags;
  std::set<std::string> seen;
  for (const TagRead& read : ordered) {
    if (!seen.insert(read.tag_id).second) continue;
    SnapshotRow row;
    row.seq = static_cast<uint32_t>(seen.size());
    row.pct_read = 100.0 * row.seq / total_tags;
    row.timestamp = render_clock_ms(takeoff_ms + read.t_ms);
    row.tag_id = read.tag_id;
    snap.rows.push_back(std::move(row));
  }
  if (seen.size() > total_tags) {
    throw std::invalid_argument("more distinct tags read than total_tags");
  }
  return snap;
}

std::vector<TagRead> ssi_trace(const std::vector<TagRead>& reads, const std::string& tag_id) {
  std::vector<TagRead> trace;
  for (const TagRead& r : reads) {
    if (r.tag_id == tag_id) trace.push_back(r);
  }
  if (trace.empty()) throw UnknownTag(tag_id);
  std::stable_sort(trace.begin(), trace.end(),
                   [](const TagRead& a, const TagRead& b) { return a.t_ms < b.t_ms; });
  return trace;
}

std::vector<std::pair<double, double>> cumulative_curve(const std::vector<TagRead>& reads,
                                                        uint32_t total_tags) {
  std::vector<TagRead> ordered = reads;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const TagRead& a, const TagRead& b) { return a.t_ms < b.t_ms; });
  std::vector<std::pair<double, double>> curve;
  std::set<std::string> seen;
  for (const TagRead& read : ordered) {
    if (seen.insert(read.tag_id).second) {
      curve.emplace_back(read.t_ms, 100.0 * seen.size() / total_tags);
    }
  }
  return curve;
}

std::vector<TagSpec> layout_from_json(const json& doc) {
  std::vector<TagSpec> layout;
  for (const auto& t : doc.at("tags")) {
    TagSpec tag;
    tag.tag_id = t.at("id").get<std::string>();
    const auto& pos = t.at("pos");
    tag.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
    if (t.contains("attenuation_db")) {
      tag.attenuation_db = t.at("attenuation_db").get<double>();
    } else if (t.contains("material")) {
      tag.attenuation_db = material_attenuation_db(t.at("material").get<std::string>());
    }
    layout.push_back(std::move(tag));
  }
  return layout;
}

FlightPath path_from_json(const json& doc) {
  FlightPath path;
  path.takeoff = doc.at("takeoff").get<std::string>();
  path.area_x_m = doc.value("area_x_m", 50.0);
  path.area_y_m = doc.value("area_y_m", 40.0);
  for (const auto& w : doc.at("waypoints")) {
    path.waypoints.push_back(
        {{w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()},
         w.at(3).get<double>()});
  }
  path.validate();
  return path;
}

ReaderParams params_from_json(const json& doc) {
  ReaderParams p;
  p.reference_power_dbm = doc.value("reference_power_dbm", p.reference_power_dbm);
  p.path_loss_exponent = doc.value("path_loss_exponent", p.path_loss_exponent);
  p.noise_sigma_db = doc.value("noise_sigma_db", p.noise_sigma_db);
  p.threshold_dbm = doc.value("threshold_dbm", p.threshold_dbm);
  p.read_period_ms = doc.value("read_period_ms", p.read_period_ms);
  if (doc.contains("blockage_intervals_ms")) {
    for (const auto& b : doc["blockage_intervals_ms"]) {
      p.blockage_intervals.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    }
  }
  if (doc.contains("blockage_boxes")) {
    for (const auto& b : doc["blockage_boxes"]) {
      p.blockage_boxes.push_back({{b.at(0).get<double>(), b.at(1).get<double>(),
                                   b.at(2).get<double>()},
                                  {b.at(3).get<double>(), b.at(4).get<double>(),
                                   b.at(5).get<double>()}});
    }
  }
  p.validate();
  return p;
}

json snapshot_to_json_rows(const InventorySnapshot& snapshot) {
  json rows = json::array();
  for (const SnapshotRow& row : snapshot.rows) {
    rows.push_back({row.seq, row.pct_read, row.timestamp, row.tag_id});
  }
  return json{{"v", 1},
              {"takeoff", snapshot.takeoff},
              {"total_tags", snapshot.total_tags},
              {"rows", rows}};
}

}  // namespace skytrace::rfidsim
