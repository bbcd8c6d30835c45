#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slicecast/ingest.hpp"

namespace slicecast {

struct Route {
    std::pair<std::string, std::string> demand;  // (source, target)
    std::vector<std::string> path;               // node ids, source..target
    std::vector<std::string> links;              // link ids joining consecutive path nodes
    double cost = 0.0;

    bool operator==(const Route& o) const = default;
};

// Minimum-cost path under link routing_costs. Ties break on fewer hops, then
// on the lexicographically smallest node sequence, so the result is a pure
// function of the topology. source == target yields an empty path at cost 0.
// Throws ValidationError for unknown nodes or an unreachable target.
Route shortest_path(const Topology& topology, const std::string& source,
                    const std::string& target);

struct RoutingResult {
    std::vector<Route> routes;                                      // in demand order
    std::vector<std::pair<std::string, std::string>> unreachable;  // residue, not fatal
};

// Routes every distinct (source, target) demand pair. Failures are collected
// in the residue list rather than aborting the batch.
RoutingResult route_all(const Topology& topology, const std::vector<DemandSeries>& demands);

}  // namespace slicecast
