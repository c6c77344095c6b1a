#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "astm/core.hpp"
#include "astm/errors.hpp"
#include "astm/random.hpp"

namespace astm {

/// One vehicle's life at the intersection. departure_time includes the
/// free-flow crossing after the queue discharges the vehicle; vehicles
/// still queued at the horizon keep departed == false.
struct VehicleRecord {
    int approach = 0;
    double arrival_time = 0.0;
    double departure_time = 0.0;
    double delay = 0.0;
    bool departed = false;

    bool operator==(const VehicleRecord&) const = default;
};

/// Ground truth a single run produces; every metric derives from this.
struct SimLog {
    std::vector<VehicleRecord> vehicles;              // arrival order
    std::vector<std::int64_t> per_minute_throughput;  // discharges per minute bin
    std::vector<std::int64_t> final_queue_lengths;    // per approach at horizon
    double horizon = 0.0;

    std::int64_t total_arrivals() const { return static_cast<std::int64_t>(vehicles.size()); }

    std::int64_t total_departures() const {
        std::int64_t n = 0;
        for (const VehicleRecord& v : vehicles) n += v.departed ? 1 : 0;
        return n;
    }

    bool operator==(const SimLog&) const = default;
};

/// What a plan provider sees when asked for the next interval's plan:
/// the elapsed clock and per-approach arrival counts for every COMPLETED
/// minute (first `completed_minutes` entries of each series are valid).
struct ControlContext {
    const Scenario& scenario;
    int interval_index = 0;
    double start_time = 0.0;
    std::int64_t completed_minutes = 0;
    const std::vector<std::vector<std::int64_t>>& minute_arrivals; // [approach][minute]
};

using PlanProvider = std::function<SignalPlan(const ControlContext&)>;

struct SimOptions {
    double control_period_s = 900.0;
    double c_min = 40.0; // accepted plan cycle bounds
    double c_max = 120.0;

    bool operator==(const SimOptions&) const = default;
};

namespace detail {

/// Whole-second execution schedule for one cycle: green runs per phase,
/// each followed by lost_time_per_phase of all-red.
struct CycleSchedule {
    std::vector<std::int64_t> green_ticks; // per phase
    std::int64_t lost_ticks_per_phase = 0;
    std::int64_t cycle_ticks = 0;

    // Returns the phase green at in-cycle tick `pos`, or -1 during all-red.
    // `green_elapsed` is the number of green ticks of that phase completed
    // including the current one.
    int phase_at(std::int64_t pos, std::int64_t& green_elapsed) const {
        std::int64_t cursor = 0;
        for (std::size_t p = 0; p < green_ticks.size(); ++p) {
            if (pos < cursor + green_ticks[p]) {
                green_elapsed = pos - cursor + 1;
                return static_cast<int>(p);
            }
            cursor += green_ticks[p] + lost_ticks_per_phase;
            if (pos < cursor) return -1;
        }
        return -1;
    }
};

/// Rounds plan greens (0.1 s granularity) to whole simulator ticks with
/// exact conservation of the total green time.
inline CycleSchedule build_schedule(const SignalPlan& plan, std::int64_t lost_ticks_per_phase) {
    CycleSchedule s;
    s.lost_ticks_per_phase = lost_ticks_per_phase;
    s.cycle_ticks = std::llround(plan.cycle_length);
    const std::int64_t total_green =
        s.cycle_ticks - lost_ticks_per_phase * static_cast<std::int64_t>(plan.greens.size());
    std::vector<std::int64_t> base(plan.greens.size());
    std::vector<std::pair<double, std::size_t>> fracs(plan.greens.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < plan.greens.size(); ++i) {
        base[i] = static_cast<std::int64_t>(std::floor(plan.greens[i] + 1e-9));
        fracs[i] = {plan.greens[i] - static_cast<double>(base[i]), i};
        assigned += base[i];
    }
    std::stable_sort(fracs.begin(), fracs.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    for (std::size_t k = 0; assigned < total_green && k < fracs.size(); ++k) {
        base[fracs[k].second] += 1;
        ++assigned;
    }
    s.green_ticks = std::move(base);
    return s;
}

/// Cumulative saturation-headway budget: at most floor(elapsed * s / 3600)
/// vehicles may have discharged after `elapsed` green seconds. Exact
/// integer arithmetic for integral saturation flows.
inline std::int64_t discharge_budget(std::int64_t elapsed_green, double saturation_flow) {
    const double integral = std::floor(saturation_flow);
    if (integral == saturation_flow) {
        return (elapsed_green * static_cast<std::int64_t>(integral)) / 3600;
    }
    return static_cast<std::int64_t>(std::floor(static_cast<double>(elapsed_green) *
                                                saturation_flow / 3600.0));
}

} // namespace detail

/// Validates a plan against the scenario's phases and the accepted bounds;
/// throws ConfigError so the simulation refuses to start the interval.
inline void validate_signal_plan(const SignalPlan& plan, const Scenario& scenario,
                                 const SimOptions& opts) {
    const std::size_t n = scenario.phases.size();
    if (plan.greens.size() != n)
        throw ConfigError("signal plan must carry one green per phase");
    if (!std::isfinite(plan.cycle_length) || plan.cycle_length <= 0.0)
        throw ConfigError("signal plan cycle length must be positive");
    if (std::abs(plan.cycle_length - std::llround(plan.cycle_length)) > 1e-9)
        throw ConfigError("signal plan cycle length must be whole seconds");
    if (plan.cycle_length < opts.c_min - 1e-9 || plan.cycle_length > opts.c_max + 1e-9)
        throw ConfigError("signal plan cycle length outside [C_min, C_max]");
    if (std::abs(plan.lost_time - scenario.total_lost_time()) > 1e-9)
        throw ConfigError("signal plan lost time must equal the scenario's total lost time");
    double green_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (plan.greens[i] < scenario.phases[i].min_green - 1e-9)
            throw ConfigError("signal plan green below phase min_green");
        green_sum += plan.greens[i];
    }
    if (std::llround((green_sum + plan.lost_time) * 10.0) !=
        std::llround(plan.cycle_length * 10.0))
        throw ConfigError("signal plan cycle length must equal greens plus lost time");
}

/// Runs the discrete 1 s tick simulation. Arrivals per approach per tick
/// are Poisson draws from per-approach streams derived from `seed`, so the
/// arrival realization is independent of the controller; queueing is FIFO;
/// greens discharge at saturation-headway rate; each green is followed by
/// lost_time_per_phase of all-red.
inline SimLog run_simulation(const Scenario& scenario, const PlanProvider& controller,
                             std::uint64_t seed, const SimOptions& opts = {}) {
    validate_scenario(scenario);
    if (opts.control_period_s < 1.0)
        throw ConfigError("control period must be at least 1 s");

    const int n_approaches = static_cast<int>(scenario.approaches.size());
    const std::int64_t horizon_ticks = std::llround(scenario.horizon);
    const std::int64_t lost_ticks = std::llround(scenario.lost_time_per_phase);
    const std::int64_t control_ticks = std::llround(opts.control_period_s);

    SimLog log;
    log.horizon = scenario.horizon;
    log.per_minute_throughput.assign((horizon_ticks + 59) / 60, 0);
    log.final_queue_lengths.assign(n_approaches, 0);

    std::vector<RandomStream> arrival_streams;
    arrival_streams.reserve(n_approaches);
    for (int a = 0; a < n_approaches; ++a) {
        arrival_streams.emplace_back(derive_seed(seed, stream::kArrivals, a));
    }

    std::vector<std::deque<std::size_t>> queues(n_approaches);
    std::vector<std::vector<std::int64_t>> minute_arrivals(
        n_approaches, std::vector<std::int64_t>((horizon_ticks + 59) / 60, 0));

    detail::CycleSchedule schedule;
    std::int64_t cycle_pos = 0;
    int active_phase = -1; // phase currently green, -1 during all-red
    std::vector<std::int64_t> served_this_green(n_approaches, 0);
    int interval_index = 0;

    for (std::int64_t t = 0; t < horizon_ticks; ++t) {
        if (t % control_ticks == 0) {
            ControlContext ctx{scenario, interval_index, static_cast<double>(t), t / 60,
                               minute_arrivals};
            const SignalPlan plan = controller(ctx);
            validate_signal_plan(plan, scenario, opts);
            schedule = detail::build_schedule(plan, lost_ticks);
            cycle_pos = 0;
            active_phase = -1;
            ++interval_index;
        }

        // Arrivals first, so a vehicle reaching an idle green departs the
        // same tick with zero delay.
        for (int a = 0; a < n_approaches; ++a) {
            const double rate = demand_rate_at(scenario.demand, a, static_cast<double>(t));
            const std::int64_t k = arrival_streams[a].poisson(rate / 3600.0);
            for (std::int64_t j = 0; j < k; ++j) {
                VehicleRecord v;
                v.approach = a;
                v.arrival_time = static_cast<double>(t);
                queues[a].push_back(log.vehicles.size());
                log.vehicles.push_back(v);
            }
            minute_arrivals[a][t / 60] += k;
        }

        std::int64_t green_elapsed = 0;
        const int phase = schedule.phase_at(cycle_pos, green_elapsed);
        if (phase != active_phase || green_elapsed == 1) {
            // New green period: the discharge budget restarts.
            if (phase >= 0) {
                for (int a : scenario.phases[phase].approaches_served) served_this_green[a] = 0;
            }
            active_phase = phase;
        }
        if (phase >= 0) {
            for (int a : scenario.phases[phase].approaches_served) {
                const std::int64_t budget =
                    detail::discharge_budget(green_elapsed, scenario.approaches[a].saturation_flow);
                std::int64_t allowed = budget - served_this_green[a];
                while (allowed > 0 && !queues[a].empty()) {
                    VehicleRecord& v = log.vehicles[queues[a].front()];
                    queues[a].pop_front();
                    const double ff = scenario.approaches[a].free_flow_crossing;
                    v.departed = true;
                    v.departure_time = static_cast<double>(t) + ff;
                    v.delay = std::max(0.0, v.departure_time - v.arrival_time - ff);
                    log.per_minute_throughput[t / 60] += 1;
                    served_this_green[a] += 1;
                    --allowed;
                }
            }
        }

        cycle_pos = (cycle_pos + 1) % schedule.cycle_ticks;
    }

    for (int a = 0; a < n_approaches; ++a) {
        log.final_queue_lengths[a] = static_cast<std::int64_t>(queues[a].size());
    }
    return log;
}

/// Per-interval arrival counts per approach; `interval_s` must divide the
/// horizon. Feeds the detector.
inline std::vector<std::vector<std::int64_t>> true_counts(const SimLog& log, double interval_s) {
    const std::int64_t horizon = std::llround(log.horizon);
    const std::int64_t step = std::llround(interval_s);
    if (step <= 0 || horizon % step != 0)
        throw ArgumentError("true_counts: interval must divide the horizon");
    const std::size_t bins = static_cast<std::size_t>(horizon / step);
    std::vector<std::vector<std::int64_t>> counts(log.final_queue_lengths.size(),
                                                  std::vector<std::int64_t>(bins, 0));
    for (const VehicleRecord& v : log.vehicles) {
        const std::size_t bin = static_cast<std::size_t>(
            std::llround(std::floor(v.arrival_time)) / step);
        counts[v.approach][bin] += 1;
    }
    return counts;
}

/// One row per vehicle: approach, arrival, departure, delay. Pending
/// vehicles write empty departure/delay fields.
inline void write_vehicle_csv(const SimLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "approach,arrival_s,departure_s,delay_s\n";
    char buf[128];
    for (const VehicleRecord& v : log.vehicles) {
        if (v.departed) {
            std::snprintf(buf, sizeof(buf), "%d,%.3f,%.3f,%.3f\n", v.approach, v.arrival_time,
                          v.departure_time, v.delay);
        } else {
            std::snprintf(buf, sizeof(buf), "%d,%.3f,,\n", v.approach, v.arrival_time);
        }
        out << buf;
    }
}

/// Per-minute discharge counts.
inline void write_throughput_csv(const SimLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "minute,departures\n";
    for (std::size_t m = 0; m < log.per_minute_throughput.size(); ++m) {
        out << m << ',' << log.per_minute_throughput[m] << '\n';
    }
}

} // namespace astm
