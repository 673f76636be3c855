// Copyright 2026 The VPKIaaS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vpki/client.hpp"
#include "vpki/orchestrator.hpp"

namespace vpki {

struct TripRecord {
  std::string vehicle_id;
  UnixSeconds depart_s = 0;
  UnixSeconds arrival_s = 0;

  std::int64_t duration() const { return arrival_s - depart_s; }
  bool operator==(const TripRecord&) const = default;
};

// Comma-separated "vehicle_id,depart_s,arrival_s". Blank lines and lines
// starting with '#' are skipped, as is a header line naming the columns.
// Output is sorted by departure (stable). ParseError carries the line number
// as detail; EmptyTrace if nothing remains.
std::vector<TripRecord> parse_trace(std::istream& in, std::string_view source = "trace");
std::vector<TripRecord> ingest_trace(const std::filesystem::path& path);
void write_trace(std::ostream& out, const std::vector<TripRecord>& trips);

struct TraceGenOptions {
  std::size_t trips = 10000;
  std::size_t vehicles = 0;  // 0 means trips / 2
  std::uint64_t seed = 1;
  UnixSeconds day_start = 0;
  // Departures: a mixture of a flat background and two Gaussian rush hours.
  double morning_peak_h = 8.0;
  double evening_peak_h = 18.0;
  double peak_sd_h = 0.6;
  double background_weight = 0.3;
  // Trip durations: log-normal around the median, clamped.
  double median_trip_s = 1200;
  double trip_sigma = 0.5;
  std::int64_t min_trip_s = 120;
  std::int64_t max_trip_s = 7200;
};

std::vector<TripRecord> generate_trace(const TraceGenOptions& options);

struct ReplayOptions {
  std::int64_t pseudonym_lifetime_s = 300;
  DelayModel delay;
  // Wall-clock speed-up of the departure schedule; must be >= 1.
  double time_compression = 60;
  std::size_t concurrency = 64;
  AcquireOptions acquire;
  std::function<void(const LatencyRecord&)> on_record;
};

// One acquisition per trip at its compressed departure time. The requested
// window is the trip's real duration starting at the moment of dispatch.
// Returns one record per trip, failures included, ordered by trip.
std::vector<LatencyRecord> replay(const std::vector<TripRecord>& trips,
                                  const ReplayOptions& options, const ClientTargets& targets,
                                  Fleet& fleet);

// Nearest-rank percentile of sorted values: the value at rank ceil(p/100*N),
// with p = 0 giving the minimum.
double nearest_rank(const std::vector<double>& sorted, double percentile);

struct PercentileRow {
  double percentile = 0;
  double value_ms = 0;
};

// NoData when values is empty; InvalidArgument for percentiles outside [0, 100].
std::vector<PercentileRow> cdf(std::vector<double> values,
                               const std::vector<double>& percentiles);
// Successful records only.
std::vector<PercentileRow> cdf(const std::vector<LatencyRecord>& records,
                               const std::vector<double>& percentiles);

// n_vehicles * ceil(commute_hours * 3600 / lifetime) * days, exact.
std::uint64_t fleet_sizing(std::uint64_t n_vehicles, double commute_hours_per_day,
                           std::int64_t pseudonym_lifetime_s, std::uint64_t days_per_year);

std::vector<LatencyRecord> read_latency_records(const std::filesystem::path& path);
void write_latency_records(const std::filesystem::path& path,
                           const std::vector<LatencyRecord>& records);
std::vector<ScalingEvent> read_scaling_log(const std::filesystem::path& path);

using Series = std::vector<std::pair<double, double>>;

// Empirical CDF points (latency_ms, fraction) per pseudonym lifetime.
std::map<std::int64_t, Series> cdf_series(const std::vector<LatencyRecord>& records);
// (t, replicas) with a vertical step at every event time.
Series replica_staircase(const std::vector<ScalingEvent>& events);
// (bucket start, requests per second) from record start times.
Series request_rate_series(const std::vector<LatencyRecord>& records, double bucket_s = 1.0);

// Writes cdf_tau<T>.csv per lifetime, replicas.csv and request_rate.csv into
// out_dir and returns the paths written.
std::vector<std::filesystem::path> render_plot_data(const std::filesystem::path& out_dir,
                                                    const std::vector<LatencyRecord>& records,
                                                    const std::vector<ScalingEvent>& events,
                                                    double rate_bucket_s = 1.0);

}  // namespace vpki
