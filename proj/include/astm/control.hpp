#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "astm/core.hpp"
#include "astm/errors.hpp"

namespace astm {

/// Per-phase critical flow ratios Y_i = critical volume / saturation flow.
struct CriticalVolumes {
    std::vector<double> y; // one per phase
    double sum_y = 0.0;

    bool operator==(const CriticalVolumes&) const = default;
};

struct WebsterResult {
    double cycle = 0.0; // s, multiple of 5, clamped
    bool oversaturated = false;
};

/// Triangular membership (a, b, c): 0 below a, 1 at b, 0 above c. An
/// infinite a or c turns that side into a shoulder.
struct FuzzySet {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double membership(double x) const {
        if (x < a || x > c) return 0.0;
        if (x <= b) {
            if (std::isinf(a) || a == b) return 1.0;
            return (x - a) / (b - a);
        }
        if (std::isinf(c) || b == c) return 1.0;
        return (c - x) / (c - b);
    }

    bool operator==(const FuzzySet&) const = default;
};

enum class FuzzyAction { Short, Keep, Long };

/// Mamdani controller configuration: three sets per input, singleton
/// multipliers per output, and a 3x3 rule table indexed [volume][trend].
struct FuzzyConfig {
    FuzzySet volume_low{0.0, 0.0, 0.4};
    FuzzySet volume_med{0.3, 0.55, 0.8};
    FuzzySet volume_high{0.7, 1.0, 1.3};

    FuzzySet trend_falling{-std::numeric_limits<double>::infinity(), -200.0, -50.0};
    FuzzySet trend_steady{-100.0, 0.0, 100.0};
    FuzzySet trend_rising{50.0, 200.0, std::numeric_limits<double>::infinity()};

    double mult_short = 0.85;
    double mult_keep = 1.0;
    double mult_long = 1.15;

    // Rows: LOW/MED/HIGH volume ratio. Columns: FALLING/STEADY/RISING trend.
    std::array<std::array<FuzzyAction, 3>, 3> rules{{
        {FuzzyAction::Short, FuzzyAction::Short, FuzzyAction::Short},
        {FuzzyAction::Short, FuzzyAction::Keep, FuzzyAction::Long},
        {FuzzyAction::Long, FuzzyAction::Long, FuzzyAction::Long},
    }};

    bool operator==(const FuzzyConfig&) const = default;
};

inline void validate_fuzzy(const FuzzyConfig& f) {
    if (!(f.mult_short > 0.0 && f.mult_keep > 0.0 && f.mult_long > 0.0))
        throw InvariantError("fuzzy multipliers must be strictly positive");
    for (const FuzzySet* s : {&f.volume_low, &f.volume_med, &f.volume_high, &f.trend_falling,
                              &f.trend_steady, &f.trend_rising}) {
        if (!(s->a <= s->b && s->b <= s->c))
            throw InvariantError("fuzzy set breakpoints must be ordered a <= b <= c");
    }
}

/// Cycle-length bounds, oversaturation guard and control cadence.
struct ControlConfig {
    double c_min = 40.0;   // s
    double c_max = 120.0;  // s
    double y_cap = 0.95;   // Webster denominator guard
    double cadence_s = 900.0; // plan recomputation period
    FuzzyConfig fuzzy;

    bool operator==(const ControlConfig&) const = default;
};

inline void validate_control(const ControlConfig& c) {
    if (!(c.c_min > 0.0 && c.c_max >= c.c_min)) throw InvariantError("cycle bounds must satisfy 0 < C_min <= C_max");
    if (!(c.y_cap > 0.0 && c.y_cap < 1.0)) throw InvariantError("Y_cap must be in (0, 1)");
    if (!(c.cadence_s >= 60.0)) throw InvariantError("control cadence must be >= 60 s");
    validate_fuzzy(c.fuzzy);
}

/// Per-phase critical flow ratios from hourly volumes (indexed by approach
/// id) and saturation flows. Critical volume of a phase is the max
/// volume/saturation ratio among the approaches it serves.
inline CriticalVolumes critical_volumes(const std::vector<Phase>& phases,
                                        const std::vector<double>& volumes,
                                        const std::vector<double>& saturation_flows) {
    if (volumes.size() != saturation_flows.size())
        throw ArgumentError("critical_volumes: volumes and saturation flows must align");
    CriticalVolumes result;
    result.y.reserve(phases.size());
    for (const Phase& ph : phases) {
        if (ph.approaches_served.empty())
            throw ArgumentError("critical_volumes: phase serves no approach");
        double y = 0.0;
        for (int a : ph.approaches_served) {
            if (a < 0 || a >= static_cast<int>(volumes.size()))
                throw ArgumentError("critical_volumes: missing volume for approach " +
                                    std::to_string(a));
            if (volumes[a] < 0.0)
                throw ArgumentError("critical_volumes: negative volume for approach " +
                                    std::to_string(a));
            if (saturation_flows[a] <= 0.0)
                throw ArgumentError("critical_volumes: saturation flow must be > 0");
            y = std::max(y, volumes[a] / saturation_flows[a]);
        }
        result.y.push_back(y);
        result.sum_y += y;
    }
    return result;
}

/// Nearest-5 rounding, half rounds up. The 1e-9 slack keeps exact decimal
/// ties (e.g. 57.5 computed through an inexact binary 0.6) rounding up.
inline double round_to_nearest_5(double x) { return 5.0 * std::floor(x / 5.0 + 0.5 + 1e-9); }

/// Webster optimal cycle: (1.5 L + 5) / (1 - sum_Y), rounded to the nearest
/// 5 s and clamped to [C_min, C_max]. Demand at or above Y_cap is reported
/// as oversaturated and pinned to C_max.
inline WebsterResult webster_cycle(double lost_time, double sum_y,
                                   const ControlConfig& cfg = {}) {
    if (lost_time < 0.0) throw ArgumentError("webster_cycle: lost time must be >= 0");
    if (sum_y < 0.0) throw ArgumentError("webster_cycle: sum_Y must be >= 0");
    if (sum_y >= cfg.y_cap) return {cfg.c_max, true};
    const double raw = (1.5 * lost_time + 5.0) / (1.0 - sum_y);
    const double cycle = std::clamp(round_to_nearest_5(raw), cfg.c_min, cfg.c_max);
    return {cycle, false};
}

namespace detail {

/// Largest-remainder apportionment of `total` deciseconds by weight.
inline std::vector<std::int64_t> apportion_ds(std::int64_t total,
                                              const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<std::int64_t> out(n, 0);
    std::vector<std::pair<double, std::size_t>> fracs(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double share = wsum > 0.0 ? static_cast<double>(total) * (weights[i] / wsum)
                                        : static_cast<double>(total) / static_cast<double>(n);
        out[i] = static_cast<std::int64_t>(std::floor(share));
        fracs[i] = {share - std::floor(share), i};
        assigned += out[i];
    }
    std::stable_sort(fracs.begin(), fracs.end(), [](const auto& lhs, const auto& rhs) {
        return lhs.first > rhs.first; // ties keep lower index first
    });
    for (std::size_t k = 0; assigned < total; ++k) {
        out[fracs[k % n].second] += 1;
        ++assigned;
    }
    return out;
}

} // namespace detail

/// Splits the usable time (cycle - L) among phases proportionally to their
/// critical flow ratios, at 0.1 s granularity with exact conservation.
/// Phases falling below min_green are pinned there and the rest is
/// re-proportioned; infeasible minimums raise InfeasiblePlanError.
inline std::vector<double> green_splits(double cycle, double lost_time,
                                        const CriticalVolumes& critical,
                                        const std::vector<Phase>& phases) {
    const std::size_t n = phases.size();
    if (critical.y.size() != n)
        throw ArgumentError("green_splits: critical volumes and phases must align");
    if (!(cycle > lost_time)) throw ArgumentError("green_splits: cycle must exceed lost time");

    const std::int64_t avail_ds = std::llround((cycle - lost_time) * 10.0);
    std::vector<std::int64_t> min_ds(n);
    for (std::size_t i = 0; i < n; ++i) {
        min_ds[i] = static_cast<std::int64_t>(std::ceil(phases[i].min_green * 10.0 - 1e-9));
    }

    std::vector<bool> fixed(n, false);
    std::vector<std::int64_t> result_ds(n, 0);
    while (true) {
        std::int64_t fixed_total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) fixed_total += min_ds[i];
        }
        if (fixed_total > avail_ds)
            throw InfeasiblePlanError("green_splits: minimum greens exceed available time");

        std::vector<double> free_weights;
        std::vector<std::size_t> free_idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (!fixed[i]) {
                free_weights.push_back(critical.sum_y > 0.0 ? critical.y[i] : 1.0);
                free_idx.push_back(i);
            }
        }
        if (free_idx.empty()) {
            if (fixed_total != avail_ds)
                throw InfeasiblePlanError("green_splits: minimum greens exceed available time");
            for (std::size_t i = 0; i < n; ++i) result_ds[i] = min_ds[i];
            break;
        }

        const std::int64_t free_total = avail_ds - fixed_total;
        std::vector<std::int64_t> shares = detail::apportion_ds(free_total, free_weights);
        bool newly_fixed = false;
        for (std::size_t k = 0; k < free_idx.size(); ++k) {
            if (shares[k] < min_ds[free_idx[k]]) {
                fixed[free_idx[k]] = true;
                newly_fixed = true;
            }
        }
        if (!newly_fixed) {
            for (std::size_t i = 0; i < n; ++i) result_ds[i] = fixed[i] ? min_ds[i] : 0;
            for (std::size_t k = 0; k < free_idx.size(); ++k) result_ds[free_idx[k]] = shares[k];
            break;
        }
    }

    std::vector<double> greens(n);
    for (std::size_t i = 0; i < n; ++i) greens[i] = static_cast<double>(result_ds[i]) / 10.0;
    return greens;
}

/// Mamdani evaluation: fuzzify both inputs, fire the 9 rules with
/// min-conjunction, aggregate per output singleton with max, defuzzify as
/// the singleton weighted average. Inputs beyond the outermost set peaks
/// saturate that set so the output is defined everywhere.
inline double fuzzy_adjust(const FuzzyConfig& cfg, double predicted_ratio, double trend) {
    if (!std::isfinite(predicted_ratio) || !std::isfinite(trend))
        throw ArgumentError("fuzzy_adjust: inputs must be finite");
    validate_fuzzy(cfg);

    std::array<double, 3> vol{cfg.volume_low.membership(predicted_ratio),
                              cfg.volume_med.membership(predicted_ratio),
                              cfg.volume_high.membership(predicted_ratio)};
    if (vol[0] + vol[1] + vol[2] == 0.0) {
        if (predicted_ratio >= cfg.volume_high.b) vol[2] = 1.0;
        else vol[0] = 1.0;
    }
    std::array<double, 3> trd{cfg.trend_falling.membership(trend),
                              cfg.trend_steady.membership(trend),
                              cfg.trend_rising.membership(trend)};
    if (trd[0] + trd[1] + trd[2] == 0.0) {
        if (trend >= cfg.trend_rising.b) trd[2] = 1.0;
        else trd[0] = 1.0;
    }

    std::array<double, 3> strength{0.0, 0.0, 0.0}; // Short, Keep, Long
    for (int v = 0; v < 3; ++v) {
        for (int t = 0; t < 3; ++t) {
            const double w = std::min(vol[v], trd[t]);
            auto& slot = strength[static_cast<int>(cfg.rules[v][t])];
            slot = std::max(slot, w);
        }
    }
    const double total = strength[0] + strength[1] + strength[2];
    if (total <= 0.0) return cfg.mult_keep;
    const double raw = (strength[0] * cfg.mult_short + strength[1] * cfg.mult_keep +
                        strength[2] * cfg.mult_long) /
                       total;
    // the weighted average lies within the singleton range; clamp away the
    // last-ulp division error
    const double lo = std::min({cfg.mult_short, cfg.mult_keep, cfg.mult_long});
    const double hi = std::max({cfg.mult_short, cfg.mult_keep, cfg.mult_long});
    return std::clamp(raw, lo, hi);
}

/// Forecast handed to the controller: next-hour volumes (veh/h, indexed by
/// approach id) and the predicted demand trend (veh/h per hour).
struct VolumeForecast {
    std::vector<double> volumes;
    double trend = 0.0;
};

/// Full control pipeline for one interval: critical volumes -> Webster ->
/// fuzzy cycle adjustment -> proportional green splits.
inline SignalPlan plan_for_interval(const Scenario& scenario, const VolumeForecast& forecast,
                                    const ControlConfig& cfg = {}) {
    validate_control(cfg);
    for (double v : forecast.volumes) {
        if (v < 0.0) throw ArgumentError("plan_for_interval: forecast volumes must be >= 0");
    }
    std::vector<double> saturation;
    saturation.reserve(scenario.approaches.size());
    for (const Approach& a : scenario.approaches) saturation.push_back(a.saturation_flow);

    const CriticalVolumes critical =
        critical_volumes(scenario.phases, forecast.volumes, saturation);
    const double lost = scenario.total_lost_time();
    const WebsterResult webster = webster_cycle(lost, critical.sum_y, cfg);
    const double multiplier = fuzzy_adjust(cfg.fuzzy, critical.sum_y, forecast.trend);
    const double cycle =
        std::clamp(round_to_nearest_5(multiplier * webster.cycle), cfg.c_min, cfg.c_max);

    SignalPlan plan;
    plan.cycle_length = cycle;
    plan.lost_time = lost;
    plan.greens = green_splits(cycle, lost, critical, scenario.phases);
    plan.oversaturated = webster.oversaturated;
    return plan;
}

} // namespace astm
