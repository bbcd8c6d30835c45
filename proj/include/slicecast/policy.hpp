#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "slicecast/model.hpp"
#include "slicecast/slicing.hpp"

namespace slicecast {

struct PolicyRules {
    double upper_util = 0.8;   // peak above this fraction of capacity scales up
    double lower_util = 0.3;   // peak below this fraction arms a scale-down
    double headroom = 0.2;     // target = ceil(peak * (1 + headroom))
    int hysteresis = 2;        // consecutive low horizons required to scale down
    double min_capacity = 1.0; // scale-down floor

    void validate() const;  // 0 < lower < upper <= 1, headroom >= 0, hysteresis >= 1
};

enum class PolicyVerb { ScaleUp, ScaleDown, Hold };

std::string to_string(PolicyVerb v);

struct PolicyAction {
    std::string slice_id;
    PolicyVerb action = PolicyVerb::Hold;
    double current_capacity = 0.0;
    double target_capacity = 0.0;
    double trigger = 0.0;  // predicted peak over the horizon
    std::int64_t effective_at = 0;
    std::string rationale;

    bool operator==(const PolicyAction& o) const = default;
};

// Scale-down hysteresis state carried between horizons: consecutive
// below-threshold counts per slice.
struct PolicyHistory {
    std::map<std::string, int> consecutive_low;
};

// Threshold rules over predicted peaks. Scale-up is immediate once the peak
// exceeds upper_util * capacity (unless the headroom target would not grow
// the slice, which holds instead); scale-down waits for `hysteresis`
// consecutive low horizons. Actions come back sorted by slice id, and
// `history` is updated in place.
std::vector<PolicyAction> generate_policies(const std::vector<ForecastResult>& forecasts,
                                            const std::vector<SliceDef>& slices,
                                            const PolicyRules& rules, PolicyHistory& history);

// "json" (versioned intent document) or "table" (aligned text); identical
// actions render byte-identically.
std::string render_policy(const std::vector<PolicyAction>& actions, const std::string& format);

nlohmann::ordered_json policy_rules_to_json(const PolicyRules& r);
PolicyRules policy_rules_from_json(const nlohmann::ordered_json& j);

}  // namespace slicecast
