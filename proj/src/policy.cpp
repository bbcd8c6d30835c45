#include "slicecast/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/series_frame.hpp"

namespace slicecast {

void PolicyRules::validate() const {
    if (!(lower_util > 0.0) || !(lower_util < upper_util) || !(upper_util <= 1.0)) {
        throw ValidationError("policy rules: need 0 < lower_util < upper_util <= 1");
    }
    if (headroom < 0.0) throw ValidationError("policy rules: headroom must be >= 0");
    if (hysteresis < 1) throw ValidationError("policy rules: hysteresis must be >= 1");
    if (!(min_capacity > 0.0)) throw ValidationError("policy rules: min_capacity must be > 0");
}

std::string to_string(PolicyVerb v) {
    switch (v) {
        case PolicyVerb::ScaleUp: return "scale-up";
        case PolicyVerb::ScaleDown: return "scale-down";
        case PolicyVerb::Hold: return "hold";
    }
    return "?";
}

std::vector<PolicyAction> generate_policies(const std::vector<ForecastResult>& forecasts,
                                            const std::vector<SliceDef>& slices,
                                            const PolicyRules& rules, PolicyHistory& history) {
    rules.validate();
    std::map<std::string, const SliceDef*> by_id;
    for (const auto& s : slices) by_id[s.id] = &s;

    std::vector<PolicyAction> actions;
    actions.reserve(forecasts.size());
    for (const auto& f : forecasts) {
        auto it = by_id.find(f.slice_id);
        if (it == by_id.end()) {
            throw ValidationError("policy: forecast names unknown slice '" + f.slice_id + "'");
        }
        if (f.predicted.empty()) {
            throw ValidationError("policy: forecast for slice '" + f.slice_id + "' is empty");
        }
        double peak = f.predicted[0];
        for (double v : f.predicted) {
            if (!std::isfinite(v)) {
                throw ValidationError("policy: non-finite forecast for slice '" + f.slice_id +
                                      "'");
            }
            peak = std::max(peak, v);
        }

        const double capacity = it->second->capacity;
        const double headroom_target = std::ceil(peak * (1.0 + rules.headroom));

        PolicyAction a;
        a.slice_id = f.slice_id;
        a.current_capacity = capacity;
        a.trigger = peak;
        a.effective_at = f.issued_at;

        char buf[160];
        int& low_count = history.consecutive_low[f.slice_id];
        if (peak > rules.upper_util * capacity) {
            low_count = 0;
            if (headroom_target > capacity) {
                a.action = PolicyVerb::ScaleUp;
                a.target_capacity = headroom_target;
                std::snprintf(buf, sizeof(buf),
                              "peak %g exceeds %g%% of capacity %g; scaling to %g", peak,
                              rules.upper_util * 100.0, capacity, headroom_target);
            } else {
                // The headroom target would not grow the slice; forcing a
                // "scale-up" to a smaller-or-equal capacity would be
                // contradictory, so record a hold.
                a.action = PolicyVerb::Hold;
                a.target_capacity = capacity;
                std::snprintf(buf, sizeof(buf),
                              "peak %g is high but headroom target %g does not exceed "
                              "capacity %g; holding",
                              peak, headroom_target, capacity);
            }
        } else if (peak < rules.lower_util * capacity) {
            ++low_count;
            const double target = std::max(headroom_target, rules.min_capacity);
            if (low_count >= rules.hysteresis && target < capacity) {
                a.action = PolicyVerb::ScaleDown;
                a.target_capacity = target;
                std::snprintf(buf, sizeof(buf),
                              "peak %g under %g%% of capacity %g for %d consecutive horizons; "
                              "scaling to %g",
                              peak, rules.lower_util * 100.0, capacity, low_count, target);
                low_count = 0;
            } else {
                a.action = PolicyVerb::Hold;
                a.target_capacity = capacity;
                std::snprintf(buf, sizeof(buf),
                              "peak %g under %g%% of capacity %g (%d/%d low horizons); holding",
                              peak, rules.lower_util * 100.0, capacity, low_count,
                              rules.hysteresis);
            }
        } else {
            low_count = 0;
            a.action = PolicyVerb::Hold;
            a.target_capacity = capacity;
            std::snprintf(buf, sizeof(buf), "peak %g within utilization band of capacity %g",
                          peak, capacity);
        }
        a.rationale = buf;
        actions.push_back(std::move(a));
    }

    std::sort(actions.begin(), actions.end(),
              [](const PolicyAction& x, const PolicyAction& y) { return x.slice_id < y.slice_id; });
    return actions;
}

namespace {

nlohmann::ordered_json action_to_json(const PolicyAction& a) {
    nlohmann::ordered_json j;
    j["slice"] = a.slice_id;
    j["action"] = to_string(a.action);
    j["current_capacity"] = a.current_capacity;
    j["target_capacity"] = a.target_capacity;
    j["trigger_peak"] = a.trigger;
    j["effective_at"] = format_utc(a.effective_at);
    j["rationale"] = a.rationale;
    return j;
}

}  // namespace

std::string render_policy(const std::vector<PolicyAction>& actions, const std::string& format) {
    if (format == "json") {
        std::int64_t issued = 0;
        for (const auto& a : actions) issued = std::max(issued, a.effective_at);
        nlohmann::ordered_json j;
        j["schema"] = "slicecast.policy/1";
        j["version"] = 1;
        j["issued_at"] = format_utc(issued);
        j["actions"] = nlohmann::ordered_json::array();
        for (const auto& a : actions) j["actions"].push_back(action_to_json(a));
        return j.dump(2) + "\n";
    }
    if (format == "table") {
        std::string out;
        char buf[240];
        std::snprintf(buf, sizeof(buf), "%-20s %-10s %14s %14s %14s  %s\n", "slice", "action",
                      "current", "target", "peak", "effective_at");
        out += buf;
        out += std::string(100, '-') + "\n";
        for (const auto& a : actions) {
            std::snprintf(buf, sizeof(buf), "%-20s %-10s %14g %14g %14g  %s\n",
                          a.slice_id.c_str(), to_string(a.action).c_str(), a.current_capacity,
                          a.target_capacity, a.trigger, format_utc(a.effective_at).c_str());
            out += buf;
        }
        return out;
    }
    throw ValidationError("render_policy: unsupported format '" + format + "' (json|table)");
}

nlohmann::ordered_json policy_rules_to_json(const PolicyRules& r) {
    nlohmann::ordered_json j;
    j["upper_util"] = r.upper_util;
    j["lower_util"] = r.lower_util;
    j["headroom"] = r.headroom;
    j["hysteresis"] = r.hysteresis;
    j["min_capacity"] = r.min_capacity;
    return j;
}

PolicyRules policy_rules_from_json(const nlohmann::ordered_json& j) {
    PolicyRules r;
    r.upper_util = j.value("upper_util", r.upper_util);
    r.lower_util = j.value("lower_util", r.lower_util);
    r.headroom = j.value("headroom", r.headroom);
    r.hysteresis = j.value("hysteresis", r.hysteresis);
    r.min_capacity = j.value("min_capacity", r.min_capacity);
    r.validate();
    return r;
}

}  // namespace slicecast
