#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "astm/core.hpp"
#include "astm/scenario_io.hpp"

using namespace astm;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

const char* kMinimalScenario = R"({
  "approaches": [
    {"id": 0, "saturation_flow": 1800, "free_flow_crossing": 10},
    {"id": 1, "saturation_flow": 1800, "free_flow_crossing": 10},
    {"id": 2, "saturation_flow": 1700, "free_flow_crossing": 12},
    {"id": 3, "saturation_flow": 1700, "free_flow_crossing": 12}
  ],
  "phases": [
    {"id": 0, "approaches_served": [0, 1], "min_green": 10},
    {"id": 1, "approaches_served": [2, 3], "min_green": 10}
  ],
  "demand": [
    {"approach": 0, "segments": [{"start": 0, "end": 7200, "rate": 300}]},
    {"approach": 1, "segments": [{"start": 0, "end": 7200, "rate": 300}]},
    {"approach": 2, "segments": [{"start": 0, "end": 7200, "rate": 200}]},
    {"approach": 3, "segments": [{"start": 0, "end": 7200, "rate": 200}]}
  ],
  "lost_time_per_phase": 6,
  "horizon": 7200,
  "seed": 42
})";

} // namespace

TEST_CASE("minimal scenario file maps fields directly") {
    const std::string path = write_temp("astm_core_min.json", kMinimalScenario);
    const Scenario s = load_scenario(path);
    CHECK(s.approaches.size() == 4);
    CHECK(s.phases.size() == 2);
    CHECK(s.horizon == 7200.0);
    CHECK(s.seed == 42);
    CHECK(s.total_lost_time() == 2 * 6.0);
}

TEST_CASE("negative arrival rate is rejected by name") {
    std::string doc = kMinimalScenario;
    doc.replace(doc.find("\"rate\": 300"), 11, "\"rate\": -5 ");
    const std::string path = write_temp("astm_core_neg.json", doc);
    CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains("negative arrival rate"),
                         InvariantError);
}

TEST_CASE("demand gap is reported as uncovered horizon") {
    std::string doc = R"({
  "approaches": [{"id": 0, "saturation_flow": 1800, "free_flow_crossing": 10}],
  "phases": [{"id": 0, "approaches_served": [0], "min_green": 5}],
  "demand": [{"approach": 0, "segments": [
    {"start": 0, "end": 3600, "rate": 100},
    {"start": 7200, "end": 10800, "rate": 100}
  ]}],
  "lost_time_per_phase": 0,
  "horizon": 10800,
  "seed": 1
})";
    const std::string path = write_temp("astm_core_gap.json", doc);
    CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains("horizon not covered"),
                         InvariantError);
}

TEST_CASE("malformed json carries file context") {
    const std::string path = write_temp("astm_core_bad.json", "{ not json");
    CHECK_THROWS_AS(load_scenario(path), ParseError);
}

TEST_CASE("demand_rate_at uses right-open intervals") {
    DemandProfile p;
    p.per_approach.push_back({{0.0, 3600.0, 300.0}, {3600.0, 7200.0, 600.0}});
    CHECK(demand_rate_at(p, 0, 0.0) == 300.0);
    CHECK(demand_rate_at(p, 0, 3599.0) == 300.0);
    CHECK(demand_rate_at(p, 0, 3600.0) == 600.0);
    CHECK_THROWS_AS(demand_rate_at(p, 0, 7200.0), RangeError);
    CHECK_THROWS_AS(demand_rate_at(p, 1, 0.0), RangeError);
}

TEST_CASE("demand lookup matches an exhaustive 1 s scan") {
    DemandProfile p;
    p.per_approach.push_back(
        {{0.0, 100.0, 10.0}, {100.0, 250.0, 20.0}, {250.0, 600.0, 0.0}});
    for (int t = 0; t < 600; ++t) {
        double expected = 0.0;
        if (t < 100) expected = 10.0;
        else if (t < 250) expected = 20.0;
        CHECK(demand_rate_at(p, 0, static_cast<double>(t)) == expected);
    }
}

TEST_CASE("scenario round-trips through serialization field-for-field") {
    const std::string path = write_temp("astm_core_rt.json", kMinimalScenario);
    const ScenarioFile original = load_scenario_file(path);
    const std::string copy_path =
        (std::filesystem::temp_directory_path() / "astm_core_rt_copy.json").string();
    save_scenario_file(original, copy_path);
    const ScenarioFile reloaded = load_scenario_file(copy_path);
    CHECK(original.scenario == reloaded.scenario);
    CHECK(original.detector == reloaded.detector);
    CHECK(original.control == reloaded.control);
}

TEST_CASE("saturation flows outside the conventional band are flagged") {
    std::string doc = kMinimalScenario;
    doc.replace(doc.find("\"saturation_flow\": 1800"), 23, "\"saturation_flow\": 2400");
    const std::string path = write_temp("astm_core_flag.json", doc);
    const ScenarioFile file = load_scenario_file(path);
    REQUIRE(file.warnings.size() == 1);
    CHECK(file.warnings[0].find("outside the conventional") != std::string::npos);
}

TEST_CASE("mean_demand_rate integrates piecewise segments") {
    DemandProfile p;
    p.per_approach.push_back({{0.0, 1800.0, 100.0}, {1800.0, 3600.0, 300.0}});
    CHECK(mean_demand_rate(p, 0, 0.0, 3600.0) == doctest::Approx(200.0));
    CHECK(mean_demand_rate(p, 0, 0.0, 1800.0) == doctest::Approx(100.0));
    // wraps modulo the span
    CHECK(mean_demand_rate(p, 0, -1800.0, 1800.0) == doctest::Approx(300.0));
    CHECK(mean_demand_rate(p, 0, 3600.0, 1800.0) == doctest::Approx(100.0));
}
