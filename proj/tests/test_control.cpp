#include <doctest.h>

#include <cmath>
#include <vector>

#include "astm/control.hpp"
#include "astm/random.hpp"

using namespace astm;

namespace {

Scenario two_phase_scenario() {
    Scenario s;
    for (int a = 0; a < 4; ++a) s.approaches.push_back({a, 1800.0, 10.0});
    s.phases.push_back({0, {0, 1}, 10.0});
    s.phases.push_back({1, {2, 3}, 10.0});
    for (int a = 0; a < 4; ++a) s.demand.per_approach.push_back({{0.0, 3600.0, 0.0}});
    s.lost_time_per_phase = 6.0;
    s.horizon = 3600.0;
    return s;
}

} // namespace

TEST_CASE("critical volumes take the max ratio per phase") {
    std::vector<Phase> phases{{0, {0, 1}, 10.0}, {1, {2, 3}, 10.0}};
    std::vector<double> sat(4, 1800.0);

    SUBCASE("balanced 540 everywhere") {
        const CriticalVolumes cv = critical_volumes(phases, {540, 540, 540, 540}, sat);
        CHECK(cv.y[0] == doctest::Approx(0.3));
        CHECK(cv.y[1] == doctest::Approx(0.3));
        CHECK(cv.sum_y == doctest::Approx(0.6));
    }
    SUBCASE("zero volumes") {
        const CriticalVolumes cv = critical_volumes(phases, {0, 0, 0, 0}, sat);
        CHECK(cv.y == std::vector<double>{0.0, 0.0});
        CHECK(cv.sum_y == 0.0);
    }
    SUBCASE("max rule inside one phase") {
        const CriticalVolumes cv = critical_volumes(phases, {720, 360, 0, 0}, sat);
        CHECK(cv.y[0] == doctest::Approx(0.4));
    }
    SUBCASE("missing volume is an argument error") {
        CHECK_THROWS_AS(critical_volumes(phases, {540, 540}, sat), ArgumentError);
    }
}

TEST_CASE("webster cycle examples are exact") {
    CHECK(webster_cycle(12.0, 0.6).cycle == 60.0);  // raw 57.5 rounds half-up
    CHECK(webster_cycle(10.0, 0.5).cycle == 40.0);  // raw 40 exactly
    CHECK(webster_cycle(0.0, 0.0).cycle == 40.0);   // raw 5 clamps to C_min
    const WebsterResult over = webster_cycle(12.0, 0.95);
    CHECK(over.cycle == 120.0);
    CHECK(over.oversaturated);
    CHECK_FALSE(webster_cycle(12.0, 0.6).oversaturated);
}

TEST_CASE("webster pre-clamp value is strictly increasing in sum_Y") {
    const double lost = 12.0;
    double prev = 0.0;
    for (double y = 0.0; y < 0.95; y += 0.01) {
        const double raw = (1.5 * lost + 5.0) / (1.0 - y);
        CHECK(raw > prev);
        prev = raw;
    }
}

TEST_CASE("webster output is always a clamped multiple of 5") {
    RandomStream gen(101);
    for (int i = 0; i < 2000; ++i) {
        const double lost = gen.uniform(0.0, 30.0);
        const double y = gen.uniform(0.0, 1.2);
        const WebsterResult w = webster_cycle(lost, y);
        CHECK(w.cycle >= 40.0);
        CHECK(w.cycle <= 120.0);
        CHECK(std::fmod(w.cycle, 5.0) == 0.0);
    }
}

TEST_CASE("custom bounds move the clamp and the oversaturation guard") {
    ControlConfig cfg;
    cfg.c_min = 30.0;
    cfg.c_max = 90.0;
    cfg.y_cap = 0.8;
    CHECK(webster_cycle(0.0, 0.0, cfg).cycle == 30.0);
    CHECK(webster_cycle(12.0, 0.85, cfg).cycle == 90.0);
    CHECK(webster_cycle(12.0, 0.85, cfg).oversaturated);
    CHECK_FALSE(webster_cycle(12.0, 0.6, cfg).oversaturated);
}

TEST_CASE("green splits: worked examples") {
    std::vector<Phase> phases{{0, {0}, 5.0}, {1, {1}, 5.0}};

    SUBCASE("symmetric") {
        const auto g = green_splits(60.0, 12.0, {{0.3, 0.3}, 0.6}, phases);
        CHECK(g == std::vector<double>{24.0, 24.0});
    }
    SUBCASE("proportional 2:1") {
        const auto g = green_splits(60.0, 12.0, {{0.4, 0.2}, 0.6}, phases);
        CHECK(g == std::vector<double>{32.0, 16.0});
    }
    SUBCASE("zero demand gives equal split") {
        const auto g = green_splits(60.0, 12.0, {{0.0, 0.0}, 0.0}, phases);
        CHECK(g == std::vector<double>{24.0, 24.0});
    }
    SUBCASE("min green pins a starved phase") {
        const auto g = green_splits(60.0, 12.0, {{0.9, 0.001}, 0.901}, phases);
        CHECK(g[1] == 5.0);
        CHECK(g[0] == 43.0);
    }
    SUBCASE("infeasible minimums throw") {
        std::vector<Phase> demanding{{0, {0}, 30.0}, {1, {1}, 30.0}};
        CHECK_THROWS_AS(green_splits(60.0, 12.0, {{0.3, 0.3}, 0.6}, demanding),
                        InfeasiblePlanError);
    }
}

TEST_CASE("green splits conserve exactly and stay proportional") {
    RandomStream gen(2023);
    for (int i = 0; i < 1000; ++i) {
        const int n = static_cast<int>(gen.uniform_int(2, 4));
        std::vector<Phase> phases;
        for (int p = 0; p < n; ++p) phases.push_back({p, {p}, 5.0});
        const double cycle = static_cast<double>(gen.uniform_int(8, 24) * 5); // 40..120
        const double lost = static_cast<double>(gen.uniform_int(0, 3) * n);
        CriticalVolumes cv;
        cv.sum_y = 0.0;
        for (int p = 0; p < n; ++p) {
            cv.y.push_back(gen.uniform(0.0, 0.4));
            cv.sum_y += cv.y.back();
        }
        const auto greens = green_splits(cycle, lost, cv, phases);

        std::int64_t total_ds = 0;
        for (double g : greens) {
            CHECK(g >= 0.0);
            total_ds += std::llround(g * 10.0);
        }
        CHECK(total_ds == std::llround((cycle - lost) * 10.0));

        // proportionality within the 0.1 s granularity when no minimum binds
        bool min_bound = false;
        for (std::size_t p = 0; p < greens.size(); ++p) {
            if (greens[p] <= phases[p].min_green + 1e-9) min_bound = true;
        }
        if (!min_bound && cv.sum_y > 0.0) {
            for (std::size_t p = 0; p < greens.size(); ++p) {
                const double ideal = (cycle - lost) * cv.y[p] / cv.sum_y;
                CHECK(std::abs(greens[p] - ideal) <= 0.1 + 1e-9);
            }
        }
    }
}

TEST_CASE("green splits are invariant under power-of-two volume scaling") {
    std::vector<Phase> phases{{0, {0, 1}, 10.0}, {1, {2, 3}, 10.0}};
    std::vector<double> sat(4, 1800.0);
    RandomStream gen(31);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> vol;
        for (int a = 0; a < 4; ++a) vol.push_back(gen.uniform(1.0, 700.0));
        const double k = (i % 2 == 0) ? 2.0 : 0.5;
        std::vector<double> scaled;
        for (double v : vol) scaled.push_back(v * k);

        const CriticalVolumes cv1 = critical_volumes(phases, vol, sat);
        const CriticalVolumes cv2 = critical_volumes(phases, scaled, sat);
        const auto g1 = green_splits(90.0, 12.0, cv1, phases);
        const auto g2 = green_splits(90.0, 12.0, cv2, phases);
        CHECK(g1 == g2);
    }
}

TEST_CASE("fuzzy peak inputs fire single rules with exact singletons") {
    const FuzzyConfig cfg;
    CHECK(fuzzy_adjust(cfg, 0.55, 0.0) == 1.0);  // MED x STEADY -> keep
    CHECK(fuzzy_adjust(cfg, 1.0, 200.0) == 1.15); // HIGH x RISING -> long
    CHECK(fuzzy_adjust(cfg, 0.0, 0.0) == 0.85);   // LOW x STEADY -> short
    CHECK(fuzzy_adjust(cfg, 0.55, -200.0) == 0.85); // MED x FALLING -> short
    CHECK(fuzzy_adjust(cfg, 0.55, 200.0) == 1.15);  // MED x RISING -> long
}

TEST_CASE("fuzzy midpoint blends the fired singletons by membership degree") {
    const FuzzyConfig cfg;
    const double ratio = 0.5 * (0.55 + 1.0); // midway between MED and HIGH peaks
    const double med = (0.8 - ratio) / (0.8 - 0.55);
    const double high = (ratio - 0.7) / (1.0 - 0.7);
    const double expected = (med * 1.0 + high * 1.15) / (med + high);
    CHECK(fuzzy_adjust(cfg, ratio, 0.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fuzzy output is bounded on a wide input grid") {
    const FuzzyConfig cfg;
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
            const double ratio = 1.3 * i / 100.0;
            const double trend = -400.0 + 800.0 * j / 100.0;
            const double m = fuzzy_adjust(cfg, ratio, trend);
            CHECK(m >= 0.85);
            CHECK(m <= 1.15);
        }
    }
    // beyond the outermost peaks the saturated set decides
    CHECK(fuzzy_adjust(cfg, 5.0, 0.0) == 1.15);
    CHECK(fuzzy_adjust(cfg, 0.55, 5000.0) == 1.15);
    CHECK(fuzzy_adjust(cfg, 0.55, -5000.0) == 0.85);
}

TEST_CASE("plan_for_interval composes the pipeline") {
    const Scenario s = two_phase_scenario();

    SUBCASE("balanced forecast, neutral fuzzy") {
        const SignalPlan p = plan_for_interval(s, {{540, 540, 540, 540}, 0.0});
        CHECK(p.cycle_length == 60.0);
        CHECK(p.greens == std::vector<double>{24.0, 24.0});
        CHECK(p.lost_time == 12.0);
        CHECK_FALSE(p.oversaturated);
    }
    SUBCASE("zero forecast clamps to C_min with equal greens") {
        const SignalPlan p = plan_for_interval(s, {{0, 0, 0, 0}, 0.0});
        CHECK(p.cycle_length == 40.0);
        CHECK(p.greens == std::vector<double>{14.0, 14.0});
    }
    SUBCASE("oversaturated forecast pins C_max and raises the flag") {
        const SignalPlan p = plan_for_interval(s, {{1800, 1800, 1800, 1800}, 0.0});
        CHECK(p.cycle_length == 120.0);
        CHECK(p.oversaturated);
    }
    SUBCASE("negative forecast volume is rejected") {
        CHECK_THROWS_AS(plan_for_interval(s, {{-1, 0, 0, 0}, 0.0}), ArgumentError);
    }
}

TEST_CASE("signal plan invariant holds for fuzzed forecasts") {
    const Scenario s = two_phase_scenario();
    RandomStream gen(88);
    for (int i = 0; i < 500; ++i) {
        VolumeForecast f;
        for (int a = 0; a < 4; ++a) f.volumes.push_back(gen.uniform(0.0, 2000.0));
        f.trend = gen.uniform(-500.0, 500.0);
        const SignalPlan p = plan_for_interval(s, f);
        CHECK(p.cycle_length >= 40.0);
        CHECK(p.cycle_length <= 120.0);
        CHECK(std::fmod(p.cycle_length, 5.0) == 0.0);
        std::int64_t ds = std::llround(p.lost_time * 10.0);
        for (double g : p.greens) {
            CHECK(g >= 10.0 - 1e-9);
            ds += std::llround(g * 10.0);
        }
        CHECK(ds == std::llround(p.cycle_length * 10.0));
    }
}
