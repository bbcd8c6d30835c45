#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "slicecast/errors.hpp"

namespace slicecast {

struct NodeDef {
    std::string id;
    double longitude = 0.0;
    double latitude = 0.0;

    bool operator==(const NodeDef&) const = default;
};

struct LinkDef {
    std::string id;
    std::string endpoint_a;
    std::string endpoint_b;
    double capacity = 0.0;
    double routing_cost = 1.0;

    bool operator==(const LinkDef&) const = default;
};

struct Topology {
    std::string name;
    std::vector<NodeDef> nodes;
    std::vector<LinkDef> links;
    bool connected = false;

    bool operator==(const Topology&) const = default;

    const NodeDef* find_node(const std::string& id) const;
    bool has_node(const std::string& id) const { return find_node(id) != nullptr; }

    // Duplicate node ids, dangling link endpoints, non-positive capacities
    // and negative costs all throw ValidationError.
    void validate() const;
    bool compute_connected() const;
};

// One origin-destination pair's traffic over time. Gaps mark snapshots the
// pair was absent from; the value there is 0 and must not be trusted.
struct DemandSeries {
    std::string source;
    std::string target;
    std::vector<std::int64_t> timestamps;  // UTC seconds, strictly increasing
    std::vector<double> values;
    std::vector<std::uint8_t> gaps;  // 1 = flagged gap at that index
    std::int64_t cadence = 0;        // modal consecutive difference, seconds

    bool operator==(const DemandSeries&) const = default;

    std::string column_id() const { return source + "->" + target; }
};

struct ParseStats {
    int warnings = 0;
    std::vector<std::string> messages;
};

// SNDlib native network format: NODES / LINKS (/ DEMANDS) sections. Unknown
// sections and extra attributes are skipped and counted as warnings. Links
// are undirected here; routing expands them to directed arcs.
Topology parse_topology(const std::string& document, ParseStats* stats = nullptr);

// The DEMANDS section of one snapshot document, keyed by (source, target).
std::map<std::pair<std::string, std::string>, double> parse_demand_snapshot(
    const std::string& document, ParseStats* stats = nullptr);

// Assemble per-pair series from parallel (document, timestamp) sequences.
// Input order does not matter: snapshots are sorted by timestamp first.
// Pairs absent from a snapshot get a flagged gap at that instant.
std::vector<DemandSeries> parse_demand_archive(const std::vector<std::string>& documents,
                                               const std::vector<std::int64_t>& timestamps,
                                               const Topology* topology = nullptr,
                                               ParseStats* stats = nullptr);

// Timestamp extraction from archive filenames ("...-YYYYMMDD-HHMM.txt").
std::optional<std::int64_t> timestamp_from_filename(const std::string& filename);

// Canonical JSON forms (stable key order).
nlohmann::ordered_json topology_to_json(const Topology& t);
Topology topology_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json demands_to_json(const std::vector<DemandSeries>& series);
std::vector<DemandSeries> demands_from_json(const nlohmann::ordered_json& j);

}  // namespace slicecast
