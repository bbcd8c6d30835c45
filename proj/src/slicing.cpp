#include "slicecast/slicing.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"

namespace slicecast {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

std::string slice_id(const std::vector<std::pair<std::string, std::string>>& members) {
    std::string key;
    for (const auto& [src, dst] : members) {
        key += src;
        key += "->";
        key += dst;
        key += ';';
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s%016llx",
                  static_cast<unsigned long long>(fnv1a64(key)));
    return buf;
}

}  // namespace

std::vector<SliceDef> form_slices(const std::vector<Route>& routes, const Topology& topology,
                                  double merge_threshold) {
    if (routes.empty()) throw ValidationError("form_slices: no routes given");
    if (merge_threshold < 0.0 || merge_threshold > 1.0) {
        throw ValidationError("form_slices: merge threshold must lie in [0, 1]");
    }

    // Base groups: identical link sets. Keyed by the sorted link set so the
    // grouping is order-independent.
    std::map<std::vector<std::string>, std::vector<std::pair<std::string, std::string>>> groups;
    for (const auto& r : routes) {
        std::vector<std::string> key(r.links.begin(), r.links.end());
        std::sort(key.begin(), key.end());
        key.erase(std::unique(key.begin(), key.end()), key.end());
        groups[key].push_back(r.demand);
    }

    std::vector<std::set<std::string>> footprints;
    std::vector<std::vector<std::pair<std::string, std::string>>> members;
    for (auto& [links, demands] : groups) {
        footprints.emplace_back(links.begin(), links.end());
        members.push_back(std::move(demands));
    }

    UnionFind uf(footprints.size());
    if (merge_threshold < 1.0) {
        for (std::size_t i = 0; i < footprints.size(); ++i) {
            for (std::size_t j = i + 1; j < footprints.size(); ++j) {
                if (jaccard(footprints[i], footprints[j]) >= merge_threshold) uf.unite(i, j);
            }
        }
    }

    std::map<std::size_t, SliceDef> merged;
    for (std::size_t i = 0; i < footprints.size(); ++i) {
        SliceDef& s = merged[uf.find(i)];
        s.member_demands.insert(s.member_demands.end(), members[i].begin(), members[i].end());
        for (const auto& l : footprints[i]) {
            if (!std::count(s.link_footprint.begin(), s.link_footprint.end(), l)) {
                s.link_footprint.push_back(l);
            }
        }
    }

    std::map<std::string, double> link_capacity;
    for (const auto& l : topology.links) link_capacity[l.id] = l.capacity;

    std::vector<SliceDef> slices;
    slices.reserve(merged.size());
    for (auto& [root, s] : merged) {
        std::sort(s.member_demands.begin(), s.member_demands.end());
        s.member_demands.erase(std::unique(s.member_demands.begin(), s.member_demands.end()),
                               s.member_demands.end());
        std::sort(s.link_footprint.begin(), s.link_footprint.end());
        s.id = slice_id(s.member_demands);
        double cap = 0.0;
        bool first = true;
        for (const auto& l : s.link_footprint) {
            auto it = link_capacity.find(l);
            if (it == link_capacity.end()) {
                throw ValidationError("form_slices: route uses unknown link '" + l + "'");
            }
            if (first || it->second < cap) cap = it->second;
            first = false;
        }
        s.capacity = cap;
        slices.push_back(std::move(s));
    }
    std::sort(slices.begin(), slices.end(),
              [](const SliceDef& a, const SliceDef& b) { return a.id < b.id; });
    return slices;
}

SeriesFrame slice_series(const std::vector<SliceDef>& slices, const SeriesFrame& frame) {
    std::vector<std::string> columns;
    columns.reserve(slices.size());
    for (const auto& s : slices) columns.push_back(s.id);

    SeriesFrame out = SeriesFrame::empty(std::move(columns), frame.timestamps);
    out.mask.assign(out.timestamps.size() * slices.size(), 1);
    for (std::size_t si = 0; si < slices.size(); ++si) {
        std::vector<std::size_t> member_cols;
        for (const auto& [src, dst] : slices[si].member_demands) {
            const std::string name = src + "->" + dst;
            member_cols.push_back(frame.column_index(name));  // throws if absent
        }
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            double sum = 0.0;
            bool valid = true;
            for (std::size_t c : member_cols) {
                sum += frame.values.at(r, c);
                valid = valid && frame.observed(r, c);
            }
            out.values.at(r, si) = sum;
            out.set_observed(r, si, valid);
        }
    }
    return out;
}

nlohmann::ordered_json slices_to_json(const std::vector<SliceDef>& slices) {
    nlohmann::ordered_json j;
    j["schema"] = "slicecast.slices/1";
    j["slices"] = nlohmann::ordered_json::array();
    for (const auto& s : slices) {
        nlohmann::ordered_json e;
        e["id"] = s.id;
        e["members"] = nlohmann::ordered_json::array();
        for (const auto& [src, dst] : s.member_demands) {
            e["members"].push_back({{"source", src}, {"target", dst}});
        }
        e["link_footprint"] = s.link_footprint;
        e["capacity"] = s.capacity;
        j["slices"].push_back(std::move(e));
    }
    return j;
}

std::vector<SliceDef> slices_from_json(const nlohmann::ordered_json& j) {
    std::vector<SliceDef> out;
    for (const auto& e : j.at("slices")) {
        SliceDef s;
        s.id = e.at("id").get<std::string>();
        for (const auto& m : e.at("members")) {
            s.member_demands.emplace_back(m.at("source").get<std::string>(),
                                          m.at("target").get<std::string>());
        }
        s.link_footprint = e.at("link_footprint").get<std::vector<std::string>>();
        s.capacity = e.at("capacity").get<double>();
        if (s.member_demands.empty()) {
            throw ValidationError("slice '" + s.id + "' has no members");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string topology_to_dot(const Topology& topology, const std::vector<SliceDef>& slices) {
    static const char* kPalette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                                     "#ff7f00", "#a65628", "#f781bf", "#999999"};
    const std::size_t palette_size = sizeof(kPalette) / sizeof(kPalette[0]);

    std::map<std::string, std::size_t> link_slice;  // link id -> first slice using it
    for (std::size_t i = 0; i < slices.size(); ++i) {
        for (const auto& l : slices[i].link_footprint) {
            link_slice.emplace(l, i);
        }
    }

    std::string out = "graph topology {\n  layout=neato;\n  node [shape=circle];\n";
    for (const auto& n : topology.nodes) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "  \"%s\" [pos=\"%g,%g!\"];\n", n.id.c_str(), n.longitude,
                      n.latitude);
        out += buf;
    }
    for (const auto& l : topology.links) {
        out += "  \"" + l.endpoint_a + "\" -- \"" + l.endpoint_b + "\" [label=\"" + l.id + "\"";
        auto it = link_slice.find(l.id);
        if (it != link_slice.end()) {
            out += " color=\"";
            out += kPalette[it->second % palette_size];
            out += "\" penwidth=2";
        }
        out += "];\n";
    }
    out += "}\n";
    return out;
}

}  // namespace slicecast
