#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "slicecast/routing.hpp"
#include "slicecast/series_frame.hpp"

namespace slicecast {

struct SliceDef {
    std::string id;                                                  // "s" + 16 hex digits
    std::vector<std::pair<std::string, std::string>> member_demands;  // sorted
    std::vector<std::string> link_footprint;                          // sorted union of member links
    double capacity = 0.0;                                            // bottleneck over footprint

    bool operator==(const SliceDef& o) const = default;
};

// Groups demands whose routes use identical link sets, then (for
// merge_threshold < 1) transitively merges groups whose footprints have
// Jaccard similarity ≥ threshold. Slice ids hash the sorted member list, so
// identical inputs always yield identical ids; output is sorted by id.
std::vector<SliceDef> form_slices(const std::vector<Route>& routes, const Topology& topology,
                                  double merge_threshold = 1.0);

// One column per slice: the elementwise sum of its members' columns, added in
// member order. Missing member columns are an error.
SeriesFrame slice_series(const std::vector<SliceDef>& slices, const SeriesFrame& frame);

nlohmann::ordered_json slices_to_json(const std::vector<SliceDef>& slices);
std::vector<SliceDef> slices_from_json(const nlohmann::ordered_json& j);

// GraphViz rendering of the topology with each slice's footprint drawn in its
// own color (links on several slices keep the first slice's color).
std::string topology_to_dot(const Topology& topology, const std::vector<SliceDef>& slices);

// FNV-1a 64-bit over a byte string; shared by slice ids and config hashing.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace slicecast
