#pragma once

#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "astm/control.hpp"
#include "astm/core.hpp"
#include "astm/detector.hpp"
#include "astm/errors.hpp"

namespace astm {

/// Full contents of one scenario document: the scenario itself plus the
/// optional `detector` and `control` configuration keys.
struct ScenarioFile {
    Scenario scenario;
    DetectorModel detector;
    ControlConfig control;
    std::vector<std::string> warnings;
};

namespace detail {

inline nlohmann::json fuzzy_set_json(const FuzzySet& s) {
    auto edge = [](double x) -> nlohmann::json {
        if (std::isinf(x)) return nullptr; // null marks an infinite shoulder
        return x;
    };
    return nlohmann::json::array({edge(s.a), edge(s.b), edge(s.c)});
}

inline FuzzySet fuzzy_set_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.size() != 3)
        throw ParseError("fuzzy set '" + name + "' must be [a, b, c]");
    auto edge = [&](const nlohmann::json& v, double inf_sign) {
        if (v.is_null()) return inf_sign * std::numeric_limits<double>::infinity();
        return v.get<double>();
    };
    return FuzzySet{edge(j[0], -1.0), j[1].get<double>(), edge(j[2], 1.0)};
}

inline const char* action_name(FuzzyAction a) {
    switch (a) {
        case FuzzyAction::Short: return "short";
        case FuzzyAction::Keep: return "keep";
        case FuzzyAction::Long: return "long";
    }
    return "keep";
}

inline FuzzyAction action_from_name(const std::string& s) {
    if (s == "short") return FuzzyAction::Short;
    if (s == "keep") return FuzzyAction::Keep;
    if (s == "long") return FuzzyAction::Long;
    throw ParseError("unknown fuzzy action '" + s + "' (expected short|keep|long)");
}

} // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioFile& file) {
    const Scenario& s = file.scenario;
    nlohmann::json j;
    for (const Approach& a : s.approaches) {
        j["approaches"].push_back({{"id", a.id},
                                   {"saturation_flow", a.saturation_flow},
                                   {"free_flow_crossing", a.free_flow_crossing}});
    }
    for (const Phase& p : s.phases) {
        j["phases"].push_back({{"id", p.id},
                               {"approaches_served", p.approaches_served},
                               {"min_green", p.min_green}});
    }
    for (std::size_t a = 0; a < s.demand.per_approach.size(); ++a) {
        nlohmann::json segs = nlohmann::json::array();
        for (const DemandSegment& seg : s.demand.per_approach[a]) {
            segs.push_back({{"start", seg.start}, {"end", seg.end}, {"rate", seg.rate}});
        }
        j["demand"].push_back({{"approach", static_cast<int>(a)}, {"segments", segs}});
    }
    j["lost_time_per_phase"] = s.lost_time_per_phase;
    j["horizon"] = s.horizon;
    j["seed"] = s.seed;
    j["detector"] = {{"recall", file.detector.recall},
                     {"false_positive_rate", file.detector.false_positive_rate}};
    const ControlConfig& c = file.control;
    j["control"] = {
        {"c_min", c.c_min},
        {"c_max", c.c_max},
        {"y_cap", c.y_cap},
        {"cadence_s", c.cadence_s},
        {"fuzzy",
         {{"volume_low", detail::fuzzy_set_json(c.fuzzy.volume_low)},
          {"volume_med", detail::fuzzy_set_json(c.fuzzy.volume_med)},
          {"volume_high", detail::fuzzy_set_json(c.fuzzy.volume_high)},
          {"trend_falling", detail::fuzzy_set_json(c.fuzzy.trend_falling)},
          {"trend_steady", detail::fuzzy_set_json(c.fuzzy.trend_steady)},
          {"trend_rising", detail::fuzzy_set_json(c.fuzzy.trend_rising)},
          {"multipliers",
           {{"short", c.fuzzy.mult_short}, {"keep", c.fuzzy.mult_keep}, {"long", c.fuzzy.mult_long}}},
          {"rules", [&] {
               nlohmann::json rows = nlohmann::json::array();
               for (const auto& row : c.fuzzy.rules) {
                   nlohmann::json r = nlohmann::json::array();
                   for (FuzzyAction a : row) r.push_back(detail::action_name(a));
                   rows.push_back(r);
               }
               return rows;
           }()}}},
    };
    return j;
}

inline ScenarioFile scenario_from_json(const nlohmann::json& j, const std::string& context) {
    ScenarioFile file;
    Scenario& s = file.scenario;
    try {
        for (const auto& a : j.at("approaches")) {
            s.approaches.push_back({a.at("id").get<int>(), a.at("saturation_flow").get<double>(),
                                    a.at("free_flow_crossing").get<double>()});
        }
        for (const auto& p : j.at("phases")) {
            s.phases.push_back({p.at("id").get<int>(),
                                p.at("approaches_served").get<std::vector<int>>(),
                                p.at("min_green").get<double>()});
        }
        s.demand.per_approach.assign(s.approaches.size(), {});
        for (const auto& d : j.at("demand")) {
            const int a = d.at("approach").get<int>();
            if (a < 0 || a >= static_cast<int>(s.approaches.size()))
                throw ParseError(context + ": demand for unknown approach " + std::to_string(a));
            for (const auto& seg : d.at("segments")) {
                s.demand.per_approach[a].push_back({seg.at("start").get<double>(),
                                                    seg.at("end").get<double>(),
                                                    seg.at("rate").get<double>()});
            }
        }
        s.lost_time_per_phase = j.at("lost_time_per_phase").get<double>();
        s.horizon = j.at("horizon").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();

        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            if (d.contains("recall")) file.detector.recall = d.at("recall").get<double>();
            if (d.contains("false_positive_rate"))
                file.detector.false_positive_rate = d.at("false_positive_rate").get<double>();
        }
        if (j.contains("control")) {
            const auto& c = j.at("control");
            ControlConfig& cc = file.control;
            if (c.contains("c_min")) cc.c_min = c.at("c_min").get<double>();
            if (c.contains("c_max")) cc.c_max = c.at("c_max").get<double>();
            if (c.contains("y_cap")) cc.y_cap = c.at("y_cap").get<double>();
            if (c.contains("cadence_s")) cc.cadence_s = c.at("cadence_s").get<double>();
            if (c.contains("fuzzy")) {
                const auto& f = c.at("fuzzy");
                FuzzyConfig& fz = cc.fuzzy;
                auto set = [&](const char* key, FuzzySet& target) {
                    if (f.contains(key)) target = detail::fuzzy_set_from_json(f.at(key), key);
                };
                set("volume_low", fz.volume_low);
                set("volume_med", fz.volume_med);
                set("volume_high", fz.volume_high);
                set("trend_falling", fz.trend_falling);
                set("trend_steady", fz.trend_steady);
                set("trend_rising", fz.trend_rising);
                if (f.contains("multipliers")) {
                    const auto& m = f.at("multipliers");
                    fz.mult_short = m.at("short").get<double>();
                    fz.mult_keep = m.at("keep").get<double>();
                    fz.mult_long = m.at("long").get<double>();
                }
                if (f.contains("rules")) {
                    const auto& rows = f.at("rules");
                    if (!rows.is_array() || rows.size() != 3)
                        throw ParseError(context + ": fuzzy rules must be a 3x3 table");
                    for (int v = 0; v < 3; ++v) {
                        if (!rows[v].is_array() || rows[v].size() != 3)
                            throw ParseError(context + ": fuzzy rules must be a 3x3 table");
                        for (int t = 0; t < 3; ++t) {
                            fz.rules[v][t] =
                                detail::action_from_name(rows[v][t].get<std::string>());
                        }
                    }
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }

    validate_scenario(s, &file.warnings);
    validate_detector(file.detector);
    validate_control(file.control);
    return file;
}

/// Loads and validates a scenario document.
inline ScenarioFile load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return scenario_from_json(j, path);
}

/// The scenario part only (detector/control keys parsed and validated but
/// dropped).
inline Scenario load_scenario(const std::string& path) {
    return load_scenario_file(path).scenario;
}

inline void save_scenario_file(const ScenarioFile& file, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << scenario_to_json(file).dump(2) << '\n';
}

} // namespace astm
