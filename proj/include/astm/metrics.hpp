#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "astm/core.hpp"
#include "astm/errors.hpp"
#include "astm/sim.hpp"

namespace astm {

/// Mean per-minute throughput: total departures over the horizon in
/// minutes. Requires at least one full minute of horizon.
inline double flow_rate(const SimLog& log) {
    if (log.horizon < 60.0) throw ArgumentError("flow_rate: horizon must be >= 60 s");
    const double minutes = log.horizon / 60.0;
    return static_cast<double>(log.total_departures()) / minutes;
}

/// Arithmetic mean delay of departed vehicles; vehicles still queued at the
/// horizon are excluded.
inline double mean_delay(const SimLog& log) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (const VehicleRecord& v : log.vehicles) {
        if (v.departed) {
            sum += v.delay;
            ++n;
        }
    }
    if (n == 0) throw UndefinedMetricError("mean_delay: no departed vehicles");
    return sum / static_cast<double>(n);
}

struct AdtAadt {
    std::vector<double> adt; // per day
    double aadt = 0.0;
};

/// Average daily traffic per day-long log and its mean. Each log must span
/// exactly one day.
inline AdtAadt adt_aadt(const std::vector<SimLog>& days) {
    if (days.empty()) throw ArgumentError("adt_aadt: need at least one day");
    AdtAadt out;
    double sum = 0.0;
    for (const SimLog& d : days) {
        if (d.horizon != 86400.0)
            throw ArgumentError("adt_aadt: each log must span exactly 86400 s");
        const double adt = static_cast<double>(d.total_arrivals());
        out.adt.push_back(adt);
        sum += adt;
    }
    out.aadt = sum / static_cast<double>(days.size());
    return out;
}

/// Travel Time Index: peak travel time over free-flow travel time, with
/// travel time modeled as free-flow crossing plus control delay. Uses
/// vehicles that arrived inside the peak and departed.
inline double tti(const SimLog& log, double peak_start, double peak_end,
                  double free_flow_crossing) {
    if (free_flow_crossing <= 0.0) throw ArgumentError("tti: free_flow_crossing must be > 0");
    if (peak_start < 0.0 || peak_end > log.horizon || peak_end <= peak_start)
        throw ArgumentError("tti: peak interval must lie within the horizon");
    double sum = 0.0;
    std::int64_t n = 0;
    for (const VehicleRecord& v : log.vehicles) {
        if (v.departed && v.arrival_time >= peak_start && v.arrival_time < peak_end) {
            sum += v.delay;
            ++n;
        }
    }
    if (n == 0) throw UndefinedMetricError("tti: no departures in the peak period");
    const double peak_delay = sum / static_cast<double>(n);
    return (free_flow_crossing + peak_delay) / free_flow_crossing;
}

/// Level-of-service grade from mean control delay (s/veh):
/// A <= 10 < B <= 20 < C <= 35 < D <= 55 < E <= 80 < F.
inline char los_grade(double mean_delay_s) {
    if (!(mean_delay_s >= 0.0)) throw ArgumentError("los_grade: delay must be >= 0");
    if (mean_delay_s <= 10.0) return 'A';
    if (mean_delay_s <= 20.0) return 'B';
    if (mean_delay_s <= 35.0) return 'C';
    if (mean_delay_s <= 55.0) return 'D';
    if (mean_delay_s <= 80.0) return 'E';
    return 'F';
}

struct PeakPeriod {
    double start = 0.0;
    double end = 0.0;

    bool operator==(const PeakPeriod&) const = default;
};

/// The window-length interval (slid at 60 s steps) with the most arrivals;
/// the earliest window wins ties.
inline PeakPeriod peak_period(const SimLog& log, double window_s) {
    if (window_s <= 0.0 || window_s > log.horizon)
        throw ArgumentError("peak_period: window must be in (0, horizon]");
    std::int64_t best_count = -1;
    double best_start = 0.0;
    for (double start = 0.0; start + window_s <= log.horizon; start += 60.0) {
        std::int64_t count = 0;
        for (const VehicleRecord& v : log.vehicles) {
            if (v.arrival_time >= start && v.arrival_time < start + window_s) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_start = start;
        }
    }
    return {best_start, best_start + window_s};
}

/// Bundle of every per-run metric. Optional fields are undefined when the
/// run had no departures (or none in the peak).
struct MetricsReport {
    double flow_rate = 0.0; // veh/min
    std::optional<double> mean_delay; // s/veh
    std::optional<double> adt;        // only for day-long runs
    std::optional<double> aadt;
    std::optional<double> tti;
    std::optional<char> los;
    PeakPeriod peak;
    std::int64_t arrivals = 0;
    std::int64_t departures = 0;
    std::string note;
};

/// Computes the full report with the repo's conventions: peak window of one
/// hour (or the whole horizon when shorter), TTI over that peak using the
/// mean of the approaches' free-flow crossings.
inline MetricsReport compute_report(const SimLog& log, const Scenario& scenario) {
    MetricsReport r;
    r.arrivals = log.total_arrivals();
    r.departures = log.total_departures();
    r.flow_rate = flow_rate(log);
    r.peak = peak_period(log, std::min(3600.0, log.horizon));
    if (r.departures > 0) {
        r.mean_delay = mean_delay(log);
        r.los = los_grade(*r.mean_delay);
    } else {
        r.note = "no departures";
    }
    double ff = 0.0;
    for (const Approach& a : scenario.approaches) ff += a.free_flow_crossing;
    ff /= static_cast<double>(scenario.approaches.size());
    try {
        r.tti = tti(log, r.peak.start, r.peak.end, ff);
    } catch (const UndefinedMetricError&) {
        // keep nullopt
    }
    if (log.horizon == 86400.0) {
        r.adt = static_cast<double>(r.arrivals);
        r.aadt = r.adt;
    }
    return r;
}

namespace detail {
inline std::string opt_field(const std::optional<double>& v) {
    if (!v) return "na";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}
} // namespace detail

inline std::string metrics_csv_header() {
    return "flow_veh_per_min,mean_delay_s,los,tti,adt,peak_start_s,peak_end_s,arrivals,"
           "departures";
}

/// Flat CSV row matching metrics_csv_header().
inline std::string metrics_csv_row(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.6f,%s,%c,%s,%s,%.0f,%.0f,%lld,%lld", r.flow_rate,
                  detail::opt_field(r.mean_delay).c_str(), r.los ? *r.los : '-',
                  detail::opt_field(r.tti).c_str(), detail::opt_field(r.adt).c_str(),
                  r.peak.start, r.peak.end, static_cast<long long>(r.arrivals),
                  static_cast<long long>(r.departures));
    return buf;
}

/// Human-readable block for terminal output.
inline std::string metrics_summary(const MetricsReport& r) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  flow rate      %.3f veh/min\n", r.flow_rate);
    out += buf;
    if (r.mean_delay) {
        std::snprintf(buf, sizeof(buf), "  mean delay     %.3f s/veh (LOS %c)\n", *r.mean_delay,
                      *r.los);
        out += buf;
    } else {
        out += "  mean delay     undefined (no departures)\n";
    }
    if (r.tti) {
        std::snprintf(buf, sizeof(buf), "  TTI            %.3f\n", *r.tti);
        out += buf;
    }
    if (r.adt) {
        std::snprintf(buf, sizeof(buf), "  ADT            %.0f veh/day\n", *r.adt);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "  peak period    [%.0f s, %.0f s)\n", r.peak.start,
                  r.peak.end);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  arrivals       %lld\n  departures     %lld\n",
                  static_cast<long long>(r.arrivals), static_cast<long long>(r.departures));
    out += buf;
    return out;
}

} // namespace astm
