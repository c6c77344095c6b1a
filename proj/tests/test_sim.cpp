#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "astm/core.hpp"
#include "astm/harness.hpp"
#include "astm/random.hpp"
#include "astm/sim.hpp"

using namespace astm;

namespace {

Scenario single_approach_scenario(double rate_veh_h, double horizon = 3600.0,
                                  double saturation = 1800.0) {
    Scenario s;
    s.approaches.push_back({0, saturation, 10.0});
    s.phases.push_back({0, {0}, 5.0});
    s.demand.per_approach.push_back({{0.0, horizon, rate_veh_h}});
    s.lost_time_per_phase = 0.0;
    s.horizon = horizon;
    s.seed = 1;
    return s;
}

/// Always the same single-phase plan: the whole cycle is green.
PlanProvider constant_plan(double cycle, double lost_time = 0.0) {
    return [cycle, lost_time](const ControlContext& ctx) {
        SignalPlan p;
        p.cycle_length = cycle;
        p.lost_time = lost_time * static_cast<double>(ctx.scenario.phases.size());
        const double green =
            (cycle - p.lost_time) / static_cast<double>(ctx.scenario.phases.size());
        p.greens.assign(ctx.scenario.phases.size(), green);
        return p;
    };
}

/// Independent single-server replay: discharges FIFO at saturation headway,
/// with the budget restarting whenever a green period restarts (every
/// `cycle` seconds and at every control interval boundary).
struct ReplayResult {
    std::vector<std::int64_t> departure_ticks; // -1 while queued at horizon
};

ReplayResult replay_single_approach(const std::vector<std::int64_t>& arrival_ticks,
                                    double saturation, std::int64_t horizon, std::int64_t cycle,
                                    std::int64_t control_period) {
    ReplayResult out;
    out.departure_ticks.assign(arrival_ticks.size(), -1);
    std::size_t next_arrival = 0;
    std::size_t head = 0; // first undeparted vehicle
    std::int64_t window_start = 0;
    std::int64_t served_in_window = 0;
    std::size_t queued = 0;
    for (std::int64_t t = 0; t < horizon; ++t) {
        if (t % control_period == 0 || (t - window_start) % cycle == 0) {
            window_start = t;
            served_in_window = 0;
        }
        while (next_arrival < arrival_ticks.size() && arrival_ticks[next_arrival] == t) {
            ++next_arrival;
            ++queued;
        }
        const std::int64_t elapsed = t - window_start + 1;
        const std::int64_t budget = static_cast<std::int64_t>(
            std::floor(static_cast<double>(elapsed) * saturation / 3600.0));
        std::int64_t allowed = budget - served_in_window;
        while (allowed > 0 && queued > 0) {
            out.departure_ticks[head] = t;
            ++head;
            --queued;
            ++served_in_window;
            --allowed;
        }
    }
    return out;
}

Scenario random_small_scenario(RandomStream& gen) {
    Scenario s;
    const int n = static_cast<int>(gen.uniform_int(1, 4));
    for (int a = 0; a < n; ++a) {
        s.approaches.push_back({a, static_cast<double>(gen.uniform_int(1500, 1800)),
                                static_cast<double>(gen.uniform_int(5, 15))});
    }
    const int n_phases = n == 1 ? 1 : static_cast<int>(gen.uniform_int(1, 2));
    if (n_phases == 1) {
        Phase p{0, {}, 5.0};
        for (int a = 0; a < n; ++a) p.approaches_served.push_back(a);
        s.phases.push_back(p);
    } else {
        const int split = static_cast<int>(gen.uniform_int(1, n - 1));
        Phase p0{0, {}, 5.0}, p1{1, {}, 5.0};
        for (int a = 0; a < n; ++a) (a < split ? p0 : p1).approaches_served.push_back(a);
        s.phases.push_back(p0);
        s.phases.push_back(p1);
    }
    s.lost_time_per_phase = static_cast<double>(gen.uniform_int(0, 6));
    s.horizon = static_cast<double>(gen.uniform_int(10, 30) * 60);
    s.seed = gen.next_u64();
    const int segments = static_cast<int>(gen.uniform_int(1, 3));
    for (int a = 0; a < n; ++a) {
        std::vector<DemandSegment> segs;
        double start = 0.0;
        for (int k = 0; k < segments; ++k) {
            const double end =
                k == segments - 1 ? s.horizon : start + std::floor((s.horizon - start) / 2.0);
            segs.push_back({start, end, gen.uniform(0.0, 900.0)});
            start = end;
        }
        s.demand.per_approach.push_back(segs);
    }
    return s;
}

} // namespace

TEST_CASE("zero demand produces an empty log") {
    Scenario s = single_approach_scenario(0.0);
    const SimLog log = run_simulation(s, constant_plan(60.0), 9);
    CHECK(log.vehicles.empty());
    CHECK(log.total_arrivals() == 0);
    CHECK(log.final_queue_lengths[0] == 0);
    for (std::int64_t m : log.per_minute_throughput) CHECK(m == 0);
}

TEST_CASE("always-green light demand: near-zero delay, replay agrees exactly") {
    Scenario s = single_approach_scenario(360.0); // service is 5x arrival rate
    SimOptions opts;
    opts.control_period_s = 3600.0;
    const SimLog log = run_simulation(s, constant_plan(60.0), 17, opts);

    REQUIRE(log.total_arrivals() > 0);
    std::vector<std::int64_t> arrivals;
    for (const VehicleRecord& v : log.vehicles) arrivals.push_back(std::llround(v.arrival_time));
    const ReplayResult replay = replay_single_approach(arrivals, 1800.0, 3600, 60, 3600);

    double delay_sum = 0.0;
    std::int64_t departed = 0;
    for (std::size_t i = 0; i < log.vehicles.size(); ++i) {
        const VehicleRecord& v = log.vehicles[i];
        if (v.departed) {
            CHECK(replay.departure_ticks[i] ==
                  std::llround(v.departure_time - s.approaches[0].free_flow_crossing));
            CHECK(v.delay == doctest::Approx(replay.departure_ticks[i] - arrivals[i]));
            delay_sum += v.delay;
            ++departed;
        } else {
            CHECK(replay.departure_ticks[i] == -1);
        }
    }
    REQUIRE(departed > 0);
    CHECK(delay_sum / static_cast<double>(departed) < 1.0);
}

TEST_CASE("overload builds the rate-difference queue across seeds") {
    // arrivals 3600 veh/h vs service 1800 veh/h: ~1800 queued after one hour
    double queue_sum = 0.0;
    const int n_seeds = 30;
    for (int k = 0; k < n_seeds; ++k) {
        Scenario s = single_approach_scenario(3600.0);
        const SimLog log = run_simulation(s, constant_plan(60.0), 1000 + k);
        queue_sum += static_cast<double>(log.final_queue_lengths[0]);
    }
    const double mean_queue = queue_sum / n_seeds;
    CHECK(mean_queue > 1800.0 * 0.9);
    CHECK(mean_queue < 1800.0 * 1.1);
}

TEST_CASE("overloaded green discharges at least one vehicle per headway") {
    Scenario s = single_approach_scenario(3600.0);
    const SimLog log = run_simulation(s, constant_plan(60.0), 3);
    // after the first minute the queue never empties, so every minute must
    // discharge at the saturation rate (30/min for 1800 veh/h)
    for (std::size_t m = 1; m < log.per_minute_throughput.size(); ++m) {
        CHECK(log.per_minute_throughput[m] >= 25);
    }
}

TEST_CASE("true_counts bins arrivals and conserves totals") {
    SimLog log;
    log.horizon = 180.0;
    log.final_queue_lengths.assign(1, 0);
    for (double t : {10.0, 70.0, 130.0}) {
        VehicleRecord v;
        v.approach = 0;
        v.arrival_time = t;
        log.vehicles.push_back(v);
    }
    const auto counts = true_counts(log, 60.0);
    REQUIRE(counts.size() == 1);
    CHECK(counts[0] == std::vector<std::int64_t>{1, 1, 1});

    SimLog empty;
    empty.horizon = 120.0;
    empty.final_queue_lengths.assign(2, 0);
    const auto zero = true_counts(empty, 60.0);
    CHECK(zero[0] == std::vector<std::int64_t>{0, 0});
    CHECK(zero[1] == std::vector<std::int64_t>{0, 0});

    CHECK_THROWS_AS(true_counts(log, 77.0), ArgumentError);
}

TEST_CASE("conservation holds on random small scenarios") {
    RandomStream gen(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const Scenario s = random_small_scenario(gen);
        SimOptions opts;
        opts.control_period_s = 300.0;
        FixedTimeController fixed(s, 60.0);
        const SimLog log = run_simulation(s, fixed, gen.next_u64(), opts);

        std::vector<std::int64_t> arrivals(s.approaches.size(), 0);
        std::vector<std::int64_t> departures(s.approaches.size(), 0);
        for (const VehicleRecord& v : log.vehicles) {
            ++arrivals[v.approach];
            if (v.departed) ++departures[v.approach];
            CHECK(v.delay >= 0.0);
            if (v.departed) CHECK(v.departure_time >= v.arrival_time);
        }
        for (std::size_t a = 0; a < s.approaches.size(); ++a) {
            CHECK(arrivals[a] == departures[a] + log.final_queue_lengths[a]);
        }
    }
}

TEST_CASE("identical inputs give bit-identical logs") {
    RandomStream gen(555);
    const Scenario s = random_small_scenario(gen);
    FixedTimeController fixed(s, 70.0);
    const SimLog a = run_simulation(s, fixed, 424242);
    const SimLog b = run_simulation(s, fixed, 424242);
    CHECK(a == b);
}

TEST_CASE("arrival realization does not depend on the controller") {
    RandomStream gen(777);
    const Scenario s = random_small_scenario(gen);
    FixedTimeController fast(s, 40.0);
    FixedTimeController slow(s, 120.0);
    const SimLog a = run_simulation(s, fast, 8);
    const SimLog b = run_simulation(s, slow, 8);
    REQUIRE(a.total_arrivals() == b.total_arrivals());
    for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
        CHECK(a.vehicles[i].approach == b.vehicles[i].approach);
        CHECK(a.vehicles[i].arrival_time == b.vehicles[i].arrival_time);
    }
}

TEST_CASE("invalid plans are refused as configuration errors") {
    Scenario s = single_approach_scenario(100.0);

    SUBCASE("cycle not equal to greens plus lost time") {
        PlanProvider bad = [](const ControlContext&) {
            SignalPlan p;
            p.cycle_length = 60.0;
            p.lost_time = 0.0;
            p.greens = {50.0};
            return p;
        };
        CHECK_THROWS_AS(run_simulation(s, bad, 1), ConfigError);
    }
    SUBCASE("green below min_green") {
        PlanProvider bad = [](const ControlContext&) {
            SignalPlan p;
            p.cycle_length = 60.0;
            p.lost_time = 56.0; // would force green 4 < min_green 5
            p.greens = {4.0};
            return p;
        };
        CHECK_THROWS_AS(run_simulation(s, bad, 1), ConfigError);
    }
    SUBCASE("cycle outside accepted bounds") {
        CHECK_THROWS_AS(run_simulation(s, constant_plan(300.0), 1), ConfigError);
    }
}

TEST_CASE("vehicles pending at the horizon stay pending") {
    // always red via a two-phase scenario where approach 0 gets green only
    // after a long competing green is impossible; instead: demand only in
    // the last 30 s with a cycle that is red there.
    Scenario s;
    s.approaches.push_back({0, 1800.0, 10.0});
    s.approaches.push_back({1, 1800.0, 10.0});
    s.phases.push_back({0, {0}, 5.0});
    s.phases.push_back({1, {1}, 5.0});
    // all demand on approach 1 in the final minute; phase 1's green never
    // arrives before the horizon ends (cycle 120: phase0 green 0-57,
    // lost 57-60, phase1 green 60-117; horizon 60 ends during lost time)
    s.demand.per_approach.push_back({{0.0, 60.0, 0.0}});
    s.demand.per_approach.push_back({{0.0, 60.0, 3600.0}});
    s.lost_time_per_phase = 3.0;
    s.horizon = 60.0;
    s.seed = 2;
    SimOptions opts;
    PlanProvider plan = [](const ControlContext&) {
        SignalPlan p;
        p.cycle_length = 120.0;
        p.lost_time = 6.0;
        p.greens = {57.0, 57.0};
        return p;
    };
    const SimLog log = run_simulation(s, plan, 6, opts);
    REQUIRE(log.total_arrivals() > 0);
    CHECK(log.total_departures() == 0);
    CHECK(log.final_queue_lengths[1] == log.total_arrivals());
    for (const VehicleRecord& v : log.vehicles) CHECK_FALSE(v.departed);
}
