#include <doctest.h>

#include <slicecast/errors.hpp>
#include <slicecast/policy.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

using namespace slicecast;

namespace {

SliceDef slice_with(const std::string& id, double capacity) {
    SliceDef s;
    s.id = id;
    s.member_demands = {{"A", "B"}};
    s.link_footprint = {"L1"};
    s.capacity = capacity;
    return s;
}

ForecastResult forecast_with(const std::string& id, std::vector<double> values,
                             std::int64_t issued_at = 1000) {
    ForecastResult f;
    f.slice_id = id;
    f.issued_at = issued_at;
    f.predicted = std::move(values);
    f.model_tag = "autoformer";
    return f;
}

}  // namespace

TEST_CASE("rule examples: up, hold, and hysteresis-gated down") {
    PolicyRules rules;  // upper 0.8, lower 0.3, headroom 0.2, hysteresis 2
    PolicyHistory history;

    // Peak 90 on capacity 100: 90 > 80, scale up to ceil(90 * 1.2) = 108.
    auto up = generate_policies({forecast_with("s1", {50, 90, 70})},
                                {slice_with("s1", 100)}, rules, history);
    REQUIRE(up.size() == 1);
    CHECK(up[0].action == PolicyVerb::ScaleUp);
    CHECK(up[0].current_capacity == 100.0);
    CHECK(up[0].target_capacity == 108.0);
    CHECK(up[0].trigger == 90.0);

    // Peak 50 on capacity 100: between the bands, plain hold.
    PolicyHistory h2;
    auto hold = generate_policies({forecast_with("s1", {10, 50, 40})},
                                  {slice_with("s1", 100)}, rules, h2);
    REQUIRE(hold.size() == 1);
    CHECK(hold[0].action == PolicyVerb::Hold);
    CHECK(hold[0].target_capacity == 100.0);

    // Peak 20 on capacity 100 twice in a row: second horizon scales down to
    // ceil(20 * 1.2) = 24.
    PolicyHistory h3;
    auto first = generate_policies({forecast_with("s1", {20, 15, 10})},
                                   {slice_with("s1", 100)}, rules, h3);
    REQUIRE(first.size() == 1);
    CHECK(first[0].action == PolicyVerb::Hold);
    CHECK(h3.consecutive_low["s1"] == 1);

    auto second = generate_policies({forecast_with("s1", {20, 18, 12})},
                                    {slice_with("s1", 100)}, rules, h3);
    REQUIRE(second.size() == 1);
    CHECK(second[0].action == PolicyVerb::ScaleDown);
    CHECK(second[0].target_capacity == 24.0);
}

TEST_CASE("an in-band horizon resets the hysteresis counter") {
    PolicyRules rules;
    PolicyHistory history;
    auto s = slice_with("s1", 100);
    generate_policies({forecast_with("s1", {20})}, {s}, rules, history);
    CHECK(history.consecutive_low["s1"] == 1);
    // Mid-band peak breaks the streak.
    generate_policies({forecast_with("s1", {50})}, {s}, rules, history);
    CHECK(history.consecutive_low["s1"] == 0);
    // Low again: the count starts over rather than completing the old streak.
    auto third = generate_policies({forecast_with("s1", {20})}, {s}, rules, history);
    CHECK(third[0].action == PolicyVerb::Hold);
}

TEST_CASE("scale-down respects the minimum capacity floor") {
    PolicyRules rules;
    rules.min_capacity = 30.0;
    PolicyHistory history;
    auto s = slice_with("s1", 100);
    generate_policies({forecast_with("s1", {5})}, {s}, rules, history);
    auto act = generate_policies({forecast_with("s1", {5})}, {s}, rules, history);
    REQUIRE(act.size() == 1);
    CHECK(act[0].action == PolicyVerb::ScaleDown);
    // ceil(5 * 1.2) = 6 would fall below the floor; the floor wins.
    CHECK(act[0].target_capacity == 30.0);
}

TEST_CASE("breaching slices never shrink even when the headroom math says so") {
    // A peak just over the upper band whose headroom target stays below the
    // current capacity must hold rather than shrink.
    PolicyRules rules;
    rules.upper_util = 0.5;
    rules.headroom = 0.0;
    PolicyHistory history;
    auto act = generate_policies({forecast_with("s1", {60})}, {slice_with("s1", 100)},
                                 rules, history);
    REQUIRE(act.size() == 1);
    CHECK(act[0].action == PolicyVerb::Hold);
    CHECK(act[0].target_capacity == 100.0);
}

TEST_CASE("monotonicity: a larger peak never yields a smaller target") {
    PolicyRules rules;
    double prev_target = 0.0;
    for (double peak = 5; peak <= 300; peak += 7) {
        PolicyHistory history;
        auto act = generate_policies({forecast_with("s1", {peak})},
                                     {slice_with("s1", 100)}, rules, history);
        REQUIRE(act.size() == 1);
        CHECK(act[0].target_capacity >= prev_target);
        prev_target = act[0].target_capacity;
    }
}

TEST_CASE("scale invariance: doubling capacity and traffic doubles the targets") {
    PolicyRules rules;
    rules.min_capacity = 0.5;
    for (double peak : {20.0, 50.0, 90.0}) {
        PolicyHistory h1, h2;
        // Two horizons so scale-down can fire as well.
        generate_policies({forecast_with("s1", {peak})}, {slice_with("s1", 100)}, rules, h1);
        auto a = generate_policies({forecast_with("s1", {peak})}, {slice_with("s1", 100)},
                                   rules, h1);
        generate_policies({forecast_with("s1", {peak * 2})}, {slice_with("s1", 200)}, rules, h2);
        auto b = generate_policies({forecast_with("s1", {peak * 2})}, {slice_with("s1", 200)},
                                   rules, h2);
        CHECK(a[0].action == b[0].action);
        // ceil() rounding keeps this within 1 unit of exact doubling.
        CHECK(std::fabs(b[0].target_capacity - 2 * a[0].target_capacity) <= 1.0);
    }
}

TEST_CASE("actions are sorted by slice id and carry the forecast timestamp") {
    PolicyRules rules;
    PolicyHistory history;
    auto acts = generate_policies(
        {forecast_with("s_zz", {90}, 500), forecast_with("s_aa", {90}, 500)},
        {slice_with("s_zz", 100), slice_with("s_aa", 100)}, rules, history);
    REQUIRE(acts.size() == 2);
    CHECK(acts[0].slice_id == "s_aa");
    CHECK(acts[1].slice_id == "s_zz");
    CHECK(acts[0].effective_at == 500);
}

TEST_CASE("unknown slices and bad forecasts are rejected") {
    PolicyRules rules;
    PolicyHistory history;
    CHECK_THROWS_AS(generate_policies({forecast_with("ghost", {10})},
                                      {slice_with("s1", 100)}, rules, history),
                    ValidationError);
    CHECK_THROWS_AS(generate_policies({forecast_with("s1", {})},
                                      {slice_with("s1", 100)}, rules, history),
                    ValidationError);
    CHECK_THROWS_AS(
        generate_policies({forecast_with("s1", {1.0, std::numeric_limits<double>::quiet_NaN()})},
                          {slice_with("s1", 100)}, rules, history),
        ValidationError);
}

TEST_CASE("rules validation") {
    PolicyRules ok;
    CHECK_NOTHROW(ok.validate());
    PolicyRules bad = ok;
    bad.lower_util = 0.9;  // above upper
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.hysteresis = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.headroom = -0.1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    PolicyRules back = policy_rules_from_json(policy_rules_to_json(ok));
    CHECK(back.upper_util == ok.upper_util);
    CHECK(back.hysteresis == ok.hysteresis);
    CHECK(back.min_capacity == ok.min_capacity);
}

TEST_CASE("rendering is byte-deterministic and versioned") {
    PolicyRules rules;
    PolicyHistory h1, h2;
    std::vector<ForecastResult> fc = {forecast_with("s1", {90, 70}, 1700000000)};
    std::vector<SliceDef> slices = {slice_with("s1", 100)};
    auto a1 = generate_policies(fc, slices, rules, h1);
    auto a2 = generate_policies(fc, slices, rules, h2);
    CHECK(render_policy(a1, "json") == render_policy(a2, "json"));
    CHECK(render_policy(a1, "table") == render_policy(a2, "table"));

    auto j = nlohmann::ordered_json::parse(render_policy(a1, "json"));
    CHECK(j["schema"] == "slicecast.policy/1");
    CHECK(j["version"] == 1);
    REQUIRE(j["actions"].size() == 1);
    CHECK(j["actions"][0]["slice"] == "s1");
    CHECK(j["actions"][0]["action"] == "scale-up");
    CHECK(j["actions"][0]["target_capacity"] == 108.0);

    std::string table = render_policy(a1, "table");
    CHECK(table.find("s1") != std::string::npos);
    CHECK(table.find("scale-up") != std::string::npos);

    CHECK_THROWS_AS(render_policy(a1, "yaml"), ValidationError);

    // Empty action lists still render valid documents.
    auto empty = nlohmann::ordered_json::parse(render_policy({}, "json"));
    CHECK(empty["actions"].is_array());
    CHECK(empty["actions"].empty());
}

TEST_CASE("verb names") {
    CHECK(to_string(PolicyVerb::ScaleUp) == "scale-up");
    CHECK(to_string(PolicyVerb::ScaleDown) == "scale-down");
    CHECK(to_string(PolicyVerb::Hold) == "hold");
}
