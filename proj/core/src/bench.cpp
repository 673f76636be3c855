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
#include "vpki/bench.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "vpki/error.hpp"
#include "vpki/thread_pool.hpp"

namespace vpki {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void parse_error(std::string_view source, std::size_t line, const std::string& what) {
  throw VpkiError(Errc::ParseError,
                  std::string(source) + ":" + std::to_string(line) + ": " + what,
                  static_cast<std::int64_t>(line));
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) return false;
  out = v;
  return true;
}

template <class T, class Parse>
std::vector<T> read_ndjson(const fs::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) fail(Errc::NotFound, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse(line));
    } catch (const VpkiError& e) {
      parse_error(path.string(), no, e.message());
    }
  }
  return out;
}

void write_series(const fs::path& path, const std::string& header, const Series& s) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::InvalidArgument, "cannot write " + path.string());
  out << header << '\n';
  out.precision(10);
  for (const auto& [x, y] : s) out << x << ',' << y << '\n';
}

}  // namespace

std::vector<TripRecord> parse_trace(std::istream& in, std::string_view source) {
  std::vector<TripRecord> trips;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(t);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(trim(col));
    if (cols.size() != 3) parse_error(source, no, "expected 3 columns, got " + std::to_string(cols.size()));
    if (trips.empty() && cols[0] == "vehicle_id") continue;
    TripRecord r;
    r.vehicle_id = cols[0];
    if (r.vehicle_id.empty()) parse_error(source, no, "empty vehicle_id");
    if (!parse_int(cols[1], r.depart_s)) parse_error(source, no, "bad depart_s '" + cols[1] + "'");
    if (!parse_int(cols[2], r.arrival_s)) parse_error(source, no, "bad arrival_s '" + cols[2] + "'");
    if (r.arrival_s <= r.depart_s) parse_error(source, no, "arrival is not after departure");
    trips.push_back(std::move(r));
  }
  if (trips.empty()) fail(Errc::EmptyTrace, std::string(source) + " has no trips");
  std::stable_sort(trips.begin(), trips.end(), [](const TripRecord& a, const TripRecord& b) {
    return a.depart_s < b.depart_s;
  });
  return trips;
}

std::vector<TripRecord> ingest_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::NotFound, "cannot open " + path.string());
  return parse_trace(in, path.string());
}

void write_trace(std::ostream& out, const std::vector<TripRecord>& trips) {
  out << "vehicle_id,depart_s,arrival_s\n";
  for (const auto& t : trips) out << t.vehicle_id << ',' << t.depart_s << ',' << t.arrival_s << '\n';
}

std::vector<TripRecord> generate_trace(const TraceGenOptions& o) {
  if (o.trips == 0) fail(Errc::InvalidConfig, "trips must be positive");
  if (o.min_trip_s <= 0 || o.max_trip_s < o.min_trip_s) {
    fail(Errc::InvalidConfig, "trip duration bounds are inconsistent");
  }
  if (!(o.background_weight >= 0 && o.background_weight <= 1)) {
    fail(Errc::InvalidConfig, "background_weight must be in [0, 1]");
  }
  const std::size_t vehicles = o.vehicles ? o.vehicles : std::max<std::size_t>(1, o.trips / 2);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> day(0.0, 86400.0);
  std::normal_distribution<double> morning(o.morning_peak_h * 3600, o.peak_sd_h * 3600);
  std::normal_distribution<double> evening(o.evening_peak_h * 3600, o.peak_sd_h * 3600);
  std::lognormal_distribution<double> length(std::log(o.median_trip_s), o.trip_sigma);
  std::uniform_int_distribution<std::size_t> pick(0, vehicles - 1);

  const int width = static_cast<int>(std::to_string(vehicles - 1).size());
  std::vector<TripRecord> trips;
  trips.reserve(o.trips);
  for (std::size_t i = 0; i < o.trips; ++i) {
    double depart;
    const double u = unit(rng);
    if (u < o.background_weight) {
      depart = day(rng);
    } else if (u < o.background_weight + (1 - o.background_weight) / 2) {
      depart = morning(rng);
    } else {
      depart = evening(rng);
    }
    depart = std::clamp(depart, 0.0, 86399.0);
    auto dur = static_cast<std::int64_t>(std::llround(length(rng)));
    dur = std::clamp(dur, o.min_trip_s, o.max_trip_s);
    std::string id = std::to_string(pick(rng));
    id = "veh-" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    auto d = o.day_start + static_cast<std::int64_t>(depart);
    trips.push_back({std::move(id), d, d + dur});
  }
  std::stable_sort(trips.begin(), trips.end(), [](const TripRecord& a, const TripRecord& b) {
    return a.depart_s < b.depart_s;
  });
  return trips;
}

std::vector<LatencyRecord> replay(const std::vector<TripRecord>& trips,
                                  const ReplayOptions& options, const ClientTargets& targets,
                                  Fleet& fleet) {
  if (!(options.time_compression >= 1)) fail(Errc::InvalidConfig, "time_compression must be >= 1");
  if (options.concurrency == 0) fail(Errc::InvalidConfig, "concurrency must be positive");
  options.delay.validate();
  if (trips.empty()) fail(Errc::EmptyTrace, "nothing to replay");
  try {
    ping(*targets.ltca, std::chrono::seconds(5));
    ping(*targets.pca, std::chrono::seconds(5));
  } catch (const VpkiError& e) {
    fail(Errc::TargetUnreachable, e.what());
  }

  std::vector<std::size_t> order(trips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return trips[a].depart_s < trips[b].depart_s;
  });
  const auto first = trips[order.front()].depart_s;
  const bool delayed =
      options.delay.base_ms > 0 || options.delay.jitter != DelayModel::Jitter::None;
  const auto tau = options.pseudonym_lifetime_s;

  RecordSink sink;
  {
    ThreadPool pool(options.concurrency);
    const auto t0 = std::chrono::steady_clock::now();
    for (auto idx : order) {
      const double offset =
          static_cast<double>(trips[idx].depart_s - first) / options.time_compression;
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::nanoseconds>(
                                             std::chrono::duration<double>(offset)));
      pool.submit([&, idx] {
        const auto& trip = trips[idx];
        LatencyRecord r;
        r.seq = idx;
        r.vehicle_id = trip.vehicle_id;
        r.tau_s = tau;
        r.t_start_unix_ms = unix_ms();
        const double started = monotonic_ms();
        try {
          auto vehicle = fleet.get(trip.vehicle_id);
          ClientTargets t = targets;
          if (delayed) {
            t.ltca = std::make_shared<DelayedEndpoint>(targets.ltca, options.delay, idx, 0);
            t.pca = std::make_shared<DelayedEndpoint>(targets.pca, options.delay, idx, 2);
          }
          const auto start = options.acquire.clock();
          auto res = acquire(t, *vehicle, start, start + trip.duration(), tau, options.acquire);
          r.end_to_end_ms = res.end_to_end_ms;
          r.steps = res.steps;
          r.pseudonyms = static_cast<std::uint32_t>(res.pseudonyms.size());
        } catch (const VpkiError& e) {
          r.status = std::string(errc_name(e.code()));
          r.step = e.step().empty() ? "register" : e.step();
          r.end_to_end_ms = monotonic_ms() - started;
        } catch (const std::exception&) {
          r.status = "InternalError";
          r.end_to_end_ms = monotonic_ms() - started;
        }
        if (options.on_record) options.on_record(r);
        sink.add(std::move(r));
      });
    }
    pool.shutdown();
  }
  auto records = sink.take();
  std::sort(records.begin(), records.end(),
            [](const LatencyRecord& a, const LatencyRecord& b) { return a.seq < b.seq; });
  return records;
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) fail(Errc::NoData, "no samples");
  if (!(p >= 0 && p <= 100)) fail(Errc::InvalidArgument, "percentile must be in [0, 100]");
  const auto n = sorted.size();
  // p * n / 100 is not exact in binary (0.07 * 10000 > 700), so shave a
  // relative epsilon before rounding up.
  const double exact = p * static_cast<double>(n) / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

std::vector<PercentileRow> cdf(std::vector<double> values, const std::vector<double>& percentiles) {
  if (values.empty()) fail(Errc::NoData, "no successful records");
  std::sort(values.begin(), values.end());
  std::vector<PercentileRow> rows;
  rows.reserve(percentiles.size());
  for (double p : percentiles) rows.push_back({p, nearest_rank(values, p)});
  return rows;
}

std::vector<PercentileRow> cdf(const std::vector<LatencyRecord>& records,
                               const std::vector<double>& percentiles) {
  std::vector<double> values;
  for (const auto& r : records) {
    if (r.ok()) values.push_back(r.end_to_end_ms);
  }
  return cdf(std::move(values), percentiles);
}

std::uint64_t fleet_sizing(std::uint64_t n_vehicles, double commute_hours_per_day,
                           std::int64_t lifetime, std::uint64_t days_per_year) {
  if (n_vehicles == 0 || !(commute_hours_per_day > 0) || lifetime <= 0 || days_per_year == 0) {
    fail(Errc::InvalidArgument, "fleet sizing inputs must be positive");
  }
  // Commute length in whole seconds; fractional hours such as 0.5 are exact.
  const double seconds = commute_hours_per_day * 3600.0;
  const auto secs = static_cast<std::uint64_t>(std::llround(seconds));
  if (std::fabs(seconds - static_cast<double>(secs)) > 1e-6) {
    fail(Errc::InvalidArgument, "commute time must be a whole number of seconds");
  }
  const auto per_day = (secs + static_cast<std::uint64_t>(lifetime) - 1) /
                       static_cast<std::uint64_t>(lifetime);
  unsigned __int128 total = static_cast<unsigned __int128>(n_vehicles) * per_day * days_per_year;
  if (total > std::numeric_limits<std::uint64_t>::max()) {
    fail(Errc::InvalidArgument, "result does not fit in 64 bits");
  }
  return static_cast<std::uint64_t>(total);
}

std::vector<LatencyRecord> read_latency_records(const fs::path& path) {
  return read_ndjson<LatencyRecord>(path, parse_latency_record);
}

void write_latency_records(const fs::path& path, const std::vector<LatencyRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::InvalidArgument, "cannot write " + path.string());
  for (const auto& r : records) out << latency_record_json(r) << '\n';
}

std::vector<ScalingEvent> read_scaling_log(const fs::path& path) {
  return read_ndjson<ScalingEvent>(path, parse_scaling_event);
}

std::map<std::int64_t, Series> cdf_series(const std::vector<LatencyRecord>& records) {
  std::map<std::int64_t, std::vector<double>> by_tau;
  for (const auto& r : records) {
    if (r.ok()) by_tau[r.tau_s].push_back(r.end_to_end_ms);
  }
  std::map<std::int64_t, Series> out;
  for (auto& [tau, values] : by_tau) {
    std::sort(values.begin(), values.end());
    auto& s = out[tau];
    const auto n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      s.emplace_back(values[i], static_cast<double>(i + 1) / n);
    }
  }
  return out;
}

Series replica_staircase(const std::vector<ScalingEvent>& events) {
  auto sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ScalingEvent& a, const ScalingEvent& b) {
    return a.timestamp < b.timestamp;
  });
  Series s;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& e = sorted[i];
    if (i > 0) s.emplace_back(e.timestamp, static_cast<double>(sorted[i - 1].replica_count));
    s.emplace_back(e.timestamp, static_cast<double>(e.replica_count));
  }
  return s;
}

Series request_rate_series(const std::vector<LatencyRecord>& records, double bucket_s) {
  if (!(bucket_s > 0)) fail(Errc::InvalidArgument, "bucket must be positive");
  std::map<std::int64_t, std::size_t> counts;
  for (const auto& r : records) {
    counts[static_cast<std::int64_t>(std::floor(r.t_start_unix_ms / 1000.0 / bucket_s))]++;
  }
  Series s;
  for (const auto& [bucket, n] : counts) {
    s.emplace_back(static_cast<double>(bucket) * bucket_s, static_cast<double>(n) / bucket_s);
  }
  return s;
}

std::vector<fs::path> render_plot_data(const fs::path& out_dir,
                                       const std::vector<LatencyRecord>& records,
                                       const std::vector<ScalingEvent>& events,
                                       double rate_bucket_s) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& [tau, series] : cdf_series(records)) {
    auto p = out_dir / ("cdf_tau" + std::to_string(tau) + ".csv");
    write_series(p, "latency_ms,cdf", series);
    written.push_back(p);
  }
  auto replicas = out_dir / "replicas.csv";
  write_series(replicas, "t_s,replicas", replica_staircase(events));
  written.push_back(replicas);
  auto rate = out_dir / "request_rate.csv";
  write_series(rate, "t_s,requests_per_s", request_rate_series(records, rate_bucket_s));
  written.push_back(rate);
  return written;
}

}  // namespace vpki
