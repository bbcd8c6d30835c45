#include "slicecast/routing.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "slicecast/errors.hpp"

namespace slicecast {

namespace {

struct Edge {
    std::size_t to;
    double cost;
    std::string link_id;
};

struct Label {
    double cost;
    std::size_t hops;
    std::vector<std::size_t> path;  // node indices, source..current

    // Extension-monotone order: comparing the node sequence only matters at
    // equal cost and hop count, where both sequences have equal length.
    bool operator<(const Label& o) const {
        if (cost != o.cost) return cost < o.cost;
        if (hops != o.hops) return hops < o.hops;
        return path < o.path;
    }
};

}  // namespace

Route shortest_path(const Topology& topology, const std::string& source,
                    const std::string& target) {
    // Indices are assigned in sorted-id order so that comparing index
    // sequences is the same as comparing node-id sequences lexicographically.
    std::vector<std::string> ids;
    ids.reserve(topology.nodes.size());
    for (const auto& n : topology.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

    auto src_it = index.find(source);
    auto dst_it = index.find(target);
    if (src_it == index.end()) throw ValidationError("shortest_path: unknown node '" + source + "'");
    if (dst_it == index.end()) throw ValidationError("shortest_path: unknown node '" + target + "'");

    Route route;
    route.demand = {source, target};
    if (source == target) return route;

    // Node-index adjacency sorted by neighbour id for reproducible expansion.
    std::vector<std::vector<Edge>> adj(ids.size());
    for (const auto& l : topology.links) {
        const std::size_t a = index.at(l.endpoint_a);
        const std::size_t b = index.at(l.endpoint_b);
        adj[a].push_back({b, l.routing_cost, l.id});
        adj[b].push_back({a, l.routing_cost, l.id});
    }
    for (auto& edges : adj) {
        std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
            if (x.to != y.to) return x.to < y.to;
            if (x.cost != y.cost) return x.cost < y.cost;
            return x.link_id < y.link_id;
        });
    }

    const std::size_t src = src_it->second;
    const std::size_t dst = dst_it->second;
    std::vector<Label> best(ids.size());
    std::vector<bool> settled(ids.size(), false);
    std::vector<bool> reached(ids.size(), false);

    std::priority_queue<std::pair<Label, std::size_t>,
                        std::vector<std::pair<Label, std::size_t>>, std::greater<>>
        frontier;
    Label start{0.0, 0, {src}};
    best[src] = start;
    reached[src] = true;
    frontier.push({start, src});

    while (!frontier.empty()) {
        auto [label, u] = frontier.top();
        frontier.pop();
        if (settled[u]) continue;
        if (best[u] < label) continue;
        settled[u] = true;
        if (u == dst) break;
        for (const auto& e : adj[u]) {
            if (settled[e.to]) continue;
            Label cand{label.cost + e.cost, label.hops + 1, label.path};
            cand.path.push_back(e.to);
            if (!reached[e.to] || cand < best[e.to]) {
                best[e.to] = cand;
                reached[e.to] = true;
                frontier.push({std::move(cand), e.to});
            }
        }
    }

    if (!reached[dst]) {
        throw ValidationError("shortest_path: no path from '" + source + "' to '" + target + "'");
    }

    const Label& final_label = best[dst];
    route.cost = final_label.cost;
    for (std::size_t i : final_label.path) route.path.push_back(ids[i]);

    // Recover link ids: for each hop pick the cheapest (then lexicographically
    // first) link joining the pair, mirroring the adjacency order used above.
    for (std::size_t i = 0; i + 1 < route.path.size(); ++i) {
        const std::string& a = route.path[i];
        const std::string& b = route.path[i + 1];
        const LinkDef* chosen = nullptr;
        for (const auto& l : topology.links) {
            if ((l.endpoint_a == a && l.endpoint_b == b) ||
                (l.endpoint_a == b && l.endpoint_b == a)) {
                if (!chosen || l.routing_cost < chosen->routing_cost ||
                    (l.routing_cost == chosen->routing_cost && l.id < chosen->id)) {
                    chosen = &l;
                }
            }
        }
        if (!chosen) throw ValidationError("shortest_path: no link joins '" + a + "'-'" + b + "'");
        route.links.push_back(chosen->id);
    }
    return route;
}

RoutingResult route_all(const Topology& topology, const std::vector<DemandSeries>& demands) {
    RoutingResult result;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& d : demands) {
        const auto key = std::make_pair(d.source, d.target);
        if (!seen.insert(key).second) continue;
        try {
            result.routes.push_back(shortest_path(topology, d.source, d.target));
        } catch (const ValidationError&) {
            result.unreachable.push_back(key);
        }
    }
    return result;
}

}  // namespace slicecast
