#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "astm/errors.hpp"

namespace astm {

/// One signalized approach (e.g. the northbound leg).
struct Approach {
    int id = 0;
    double saturation_flow = 1800.0;  // veh/h discharged under continuous green
    double free_flow_crossing = 10.0; // s to traverse the intersection unimpeded

    bool operator==(const Approach&) const = default;
};

/// A signal phase and the approaches it serves simultaneously.
struct Phase {
    int id = 0;
    std::vector<int> approaches_served;
    double min_green = 5.0; // s

    bool operator==(const Phase&) const = default;
};

/// Piecewise-constant arrival rate segment, right-open [start, end).
struct DemandSegment {
    double start = 0.0; // s
    double end = 0.0;   // s
    double rate = 0.0;  // veh/h

    bool operator==(const DemandSegment&) const = default;
};

/// Per-approach piecewise-constant arrival rates covering the full horizon.
struct DemandProfile {
    std::vector<std::vector<DemandSegment>> per_approach; // indexed by approach id

    bool operator==(const DemandProfile&) const = default;
};

struct Scenario {
    std::vector<Approach> approaches;
    std::vector<Phase> phases;
    DemandProfile demand;
    double lost_time_per_phase = 6.0; // s of all-red after each green
    double horizon = 3600.0;          // s
    std::uint64_t seed = 0;

    /// Total unusable time per cycle.
    double total_lost_time() const {
        return lost_time_per_phase * static_cast<double>(phases.size());
    }

    bool operator==(const Scenario&) const = default;
};

/// A signal timing plan the controller emits and the simulator executes.
struct SignalPlan {
    double cycle_length = 0.0;  // s
    std::vector<double> greens; // s per phase, 0.1 s granularity
    double lost_time = 0.0;     // s per cycle, total
    bool oversaturated = false; // set when demand exceeded the Webster guard

    bool operator==(const SignalPlan&) const = default;
};

namespace detail {
inline bool nearly_integral(double x) { return std::abs(x - std::llround(x)) < 1e-9; }
} // namespace detail

/// Checks every Scenario invariant; throws InvariantError naming the first
/// violation found. Saturation flows outside the conventional band are
/// allowed but reported through `warnings` when given.
inline void validate_scenario(const Scenario& s, std::vector<std::string>* warnings = nullptr) {
    if (s.horizon <= 0.0) throw InvariantError("horizon must be > 0");
    if (!detail::nearly_integral(s.horizon))
        throw InvariantError("horizon must be a whole number of seconds");
    if (s.lost_time_per_phase < 0.0) throw InvariantError("lost_time_per_phase must be >= 0");
    if (!detail::nearly_integral(s.lost_time_per_phase))
        throw InvariantError("lost_time_per_phase must be a whole number of seconds");
    if (s.approaches.empty()) throw InvariantError("scenario needs at least one approach");
    if (s.phases.empty()) throw InvariantError("scenario needs at least one phase");

    const int n = static_cast<int>(s.approaches.size());
    for (int i = 0; i < n; ++i) {
        const Approach& a = s.approaches[i];
        if (a.id != i) throw InvariantError("approach ids must be 0..n-1 in order");
        if (a.saturation_flow <= 0.0) throw InvariantError("saturation_flow must be > 0");
        if (a.free_flow_crossing <= 0.0) throw InvariantError("free_flow_crossing must be > 0");
        if (warnings && (a.saturation_flow < 1500.0 || a.saturation_flow > 1800.0)) {
            warnings->push_back("approach " + std::to_string(a.id) + ": saturation_flow " +
                                std::to_string(a.saturation_flow) +
                                " outside the conventional 1500-1800 veh/h band");
        }
    }

    std::vector<int> phase_of(n, -1);
    for (std::size_t p = 0; p < s.phases.size(); ++p) {
        const Phase& ph = s.phases[p];
        if (ph.id != static_cast<int>(p)) throw InvariantError("phase ids must be 0..n-1 in order");
        if (ph.approaches_served.empty())
            throw InvariantError("phase must serve at least one approach");
        if (ph.min_green < 5.0) throw InvariantError("min_green must be >= 5 s");
        for (int a : ph.approaches_served) {
            if (a < 0 || a >= n) throw InvariantError("phase serves unknown approach id");
            if (phase_of[a] != -1)
                throw InvariantError("approach " + std::to_string(a) +
                                     " served by more than one phase");
            phase_of[a] = static_cast<int>(p);
        }
    }
    for (int a = 0; a < n; ++a) {
        if (phase_of[a] == -1)
            throw InvariantError("approach " + std::to_string(a) + " not served by any phase");
    }

    if (static_cast<int>(s.demand.per_approach.size()) != n)
        throw InvariantError("demand must define a profile for every approach");
    for (int a = 0; a < n; ++a) {
        const auto& segs = s.demand.per_approach[a];
        if (segs.empty()) throw InvariantError("empty demand profile for approach " +
                                               std::to_string(a));
        double cursor = 0.0;
        for (const DemandSegment& seg : segs) {
            if (seg.rate < 0.0) throw InvariantError("negative arrival rate");
            if (seg.end <= seg.start) throw InvariantError("demand interval boundaries must be "
                                                           "strictly increasing");
            if (seg.start != cursor) throw InvariantError("horizon not covered");
            cursor = seg.end;
        }
        if (cursor != s.horizon) throw InvariantError("horizon not covered");
    }
}

/// Arrival rate (veh/h) for `approach` at time `t`, right-open intervals.
inline double demand_rate_at(const DemandProfile& profile, int approach, double t) {
    if (approach < 0 || approach >= static_cast<int>(profile.per_approach.size()))
        throw RangeError("demand_rate_at: unknown approach id " + std::to_string(approach));
    const auto& segs = profile.per_approach[approach];
    for (const DemandSegment& seg : segs) {
        if (t >= seg.start && t < seg.end) return seg.rate;
    }
    throw RangeError("demand_rate_at: t=" + std::to_string(t) + " outside the horizon");
}

/// Mean arrival rate (veh/h) over [start, start+duration), wrapping modulo
/// the profile span. Used to synthesize pre-run detector history.
inline double mean_demand_rate(const DemandProfile& profile, int approach, double start,
                               double duration) {
    if (approach < 0 || approach >= static_cast<int>(profile.per_approach.size()))
        throw RangeError("mean_demand_rate: unknown approach id");
    const auto& segs = profile.per_approach[approach];
    const double span = segs.back().end;
    double acc = 0.0;
    double remaining = duration;
    double t = std::fmod(start, span);
    if (t < 0) t += span;
    while (remaining > 1e-9) {
        double rate = 0.0;
        double seg_end = span;
        for (const DemandSegment& seg : segs) {
            if (t >= seg.start && t < seg.end) {
                rate = seg.rate;
                seg_end = seg.end;
                break;
            }
        }
        const double step = std::min(remaining, seg_end - t);
        acc += rate * step;
        remaining -= step;
        t = seg_end < span ? seg_end : 0.0;
    }
    return acc / duration;
}

} // namespace astm
