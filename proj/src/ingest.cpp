#include "slicecast/ingest.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace slicecast {

namespace {

struct Token {
    std::string text;
    int line = 0;
};

bool is_paren(const std::string& t) {
    return t == "(" || t == ")";
}

std::vector<Token> tokenize(const std::string& doc) {
    std::vector<Token> out;
    int line = 1;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back({cur, line});
            cur.clear();
        }
    };
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const char ch = doc[i];
        if (ch == '\n') {
            flush();
            ++line;
        } else if (ch == '#' || (ch == '?' && cur.empty() &&
                                 (out.empty() || out.back().line != line))) {
            // comment or "?SNDlib ..." header line
            flush();
            while (i < doc.size() && doc[i] != '\n') ++i;
            --i;
        } else if (ch == '(' || ch == ')') {
            flush();
            out.push_back({std::string(1, ch), line});
        } else if (std::isspace(static_cast<unsigned char>(ch))) {
            flush();
        } else {
            cur.push_back(ch);
        }
    }
    flush();
    return out;
}

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    bool done() const { return pos_ >= tokens_.size(); }
    const Token& peek(std::size_t ahead = 0) const {
        static const Token kEof{"", -1};
        return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : kEof;
    }
    Token next() {
        if (done()) throw ParseError("unexpected end of document", last_line_);
        last_line_ = tokens_[pos_].line;
        return tokens_[pos_++];
    }
    void expect(const std::string& text) {
        Token t = next();
        if (t.text != text) {
            throw ParseError("expected '" + text + "', found '" + t.text + "'", t.line);
        }
    }
    int line() const { return last_line_; }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int last_line_ = 1;
};

bool parse_number(const std::string& text, double& out) {
    const char* begin = text.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + text.size() && !text.empty();
}

double expect_number(TokenStream& ts, const char* what) {
    Token t = ts.next();
    double v = 0.0;
    if (!parse_number(t.text, v)) {
        throw ParseError(std::string("expected ") + what + ", found '" + t.text + "'", t.line);
    }
    return v;
}

void skip_balanced(TokenStream& ts) {
    // Consumes a '(' ... ')' group, nesting allowed.
    ts.expect("(");
    int depth = 1;
    while (depth > 0) {
        Token t = ts.next();
        if (t.text == "(") ++depth;
        if (t.text == ")") --depth;
    }
}

void warn(ParseStats* stats, const std::string& msg) {
    if (stats) {
        ++stats->warnings;
        stats->messages.push_back(msg);
    }
}

struct LinkEntryAttrs {
    std::vector<double> scalars;            // pre_cap, pre_cap_cost, routing_cost, setup_cost
    std::vector<double> module_capacities;  // first number of each module pair
};

// Entry bodies end where the next entry id (IDENT followed by '(') or the
// section's closing paren begins.
bool at_entry_end(const TokenStream& ts) {
    const Token& t = ts.peek();
    if (t.line < 0 || t.text == ")") return true;
    // The next entry begins with an identifier followed by "(". A number in
    // that position is still part of the current entry's attribute list (a
    // scalar right before its capacity-module list), never a new id.
    double numeric;
    return !is_paren(t.text) && !parse_number(t.text, numeric) && ts.peek(1).text == "(";
}

void parse_nodes_section(TokenStream& ts, Topology& topo) {
    ts.expect("(");
    while (ts.peek().text != ")") {
        Token id = ts.next();
        if (is_paren(id.text)) throw ParseError("expected node id, found '" + id.text + "'", id.line);
        ts.expect("(");
        NodeDef n;
        n.id = id.text;
        n.longitude = expect_number(ts, "longitude");
        n.latitude = expect_number(ts, "latitude");
        ts.expect(")");
        topo.nodes.push_back(std::move(n));
    }
    ts.expect(")");
}

void parse_links_section(TokenStream& ts, Topology& topo, ParseStats* stats) {
    ts.expect("(");
    while (ts.peek().text != ")") {
        Token id = ts.next();
        if (is_paren(id.text)) throw ParseError("expected link id, found '" + id.text + "'", id.line);
        ts.expect("(");
        Token a = ts.next();
        Token b = ts.next();
        if (is_paren(a.text) || is_paren(b.text)) {
            throw ParseError("link '" + id.text + "': expected two endpoint ids", id.line);
        }
        ts.expect(")");

        LinkEntryAttrs attrs;
        while (!at_entry_end(ts)) {
            Token t = ts.next();
            if (t.text == "(") {
                // capacity module list: pairs of (capacity, cost)
                bool first_of_pair = true;
                while (ts.peek().text != ")") {
                    const double v = expect_number(ts, "module value");
                    if (first_of_pair) attrs.module_capacities.push_back(v);
                    first_of_pair = !first_of_pair;
                }
                ts.expect(")");
            } else {
                double v = 0.0;
                if (!parse_number(t.text, v)) {
                    throw ParseError("link '" + id.text + "': expected attribute number, found '" +
                                         t.text + "'",
                                     t.line);
                }
                attrs.scalars.push_back(v);
            }
        }

        LinkDef l;
        l.id = id.text;
        l.endpoint_a = a.text;
        l.endpoint_b = b.text;
        if (attrs.scalars.size() >= 3) {
            l.routing_cost = attrs.scalars[2];
        } else {
            l.routing_cost = 1.0;
            warn(stats, "link '" + l.id + "': no routing cost, defaulting to 1.0");
        }
        if (attrs.scalars.size() > 4) {
            warn(stats, "link '" + l.id + "': ignoring extra attributes");
        }
        const double pre_cap = attrs.scalars.empty() ? 0.0 : attrs.scalars[0];
        if (pre_cap > 0.0) {
            l.capacity = pre_cap;
        } else if (!attrs.module_capacities.empty()) {
            l.capacity = attrs.module_capacities[0];
        }
        topo.links.push_back(std::move(l));
    }
    ts.expect(")");
}

void parse_demands_section(TokenStream& ts,
                           std::map<std::pair<std::string, std::string>, double>& out,
                           ParseStats* stats) {
    ts.expect("(");
    while (ts.peek().text != ")") {
        Token id = ts.next();
        if (is_paren(id.text)) {
            throw ParseError("expected demand id, found '" + id.text + "'", id.line);
        }
        ts.expect("(");
        Token src = ts.next();
        Token dst = ts.next();
        if (is_paren(src.text) || is_paren(dst.text)) {
            throw ParseError("demand '" + id.text + "': expected source and target ids", id.line);
        }
        ts.expect(")");
        std::vector<std::string> attrs;
        while (!at_entry_end(ts)) {
            Token t = ts.next();
            if (t.text == "(") {
                // ignore any attached group (e.g. admissible paths)
                int depth = 1;
                while (depth > 0) {
                    Token g = ts.next();
                    if (g.text == "(") ++depth;
                    if (g.text == ")") --depth;
                }
                warn(stats, "demand '" + id.text + "': ignoring attached group");
            } else {
                attrs.push_back(t.text);
            }
        }
        if (attrs.size() < 2) {
            throw ParseError("demand '" + id.text + "': expected routing unit and demand value",
                             id.line);
        }
        double value = 0.0;
        if (!parse_number(attrs[1], value)) {
            throw ParseError("demand '" + id.text + "': bad demand value '" + attrs[1] + "'",
                             id.line);
        }
        if (attrs.size() > 3) warn(stats, "demand '" + id.text + "': ignoring extra attributes");
        const auto key = std::make_pair(src.text, dst.text);
        if (out.count(key)) {
            out[key] += value;
            warn(stats, "demand '" + id.text + "': duplicate pair, values summed");
        } else {
            out[key] = value;
        }
    }
    ts.expect(")");
}

std::int64_t modal_cadence(const std::vector<std::int64_t>& ts) {
    if (ts.size() < 2) return 0;
    std::map<std::int64_t, int> counts;
    for (std::size_t i = 1; i < ts.size(); ++i) ++counts[ts[i] - ts[i - 1]];
    std::int64_t best = 0;
    int best_count = 0;
    for (const auto& [diff, count] : counts) {
        if (count > best_count) {  // ties resolve to the smallest diff
            best = diff;
            best_count = count;
        }
    }
    return best;
}

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

const NodeDef* Topology::find_node(const std::string& id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

void Topology::validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& n : nodes) {
        if (!ids.insert(n.id).second) {
            throw ValidationError("duplicate node id '" + n.id + "'");
        }
    }
    std::unordered_set<std::string> link_ids;
    for (const auto& l : links) {
        if (!link_ids.insert(l.id).second) {
            throw ValidationError("duplicate link id '" + l.id + "'");
        }
        if (!ids.count(l.endpoint_a)) {
            throw ValidationError("link '" + l.id + "' references unknown node '" + l.endpoint_a +
                                  "'");
        }
        if (!ids.count(l.endpoint_b)) {
            throw ValidationError("link '" + l.id + "' references unknown node '" + l.endpoint_b +
                                  "'");
        }
        if (!(l.capacity > 0.0)) {
            throw ValidationError("link '" + l.id + "' has non-positive capacity");
        }
        if (l.routing_cost < 0.0) {
            throw ValidationError("link '" + l.id + "' has negative routing cost");
        }
    }
}

bool Topology::compute_connected() const {
    if (nodes.empty()) return false;
    std::unordered_map<std::string, std::vector<std::string>> adj;
    for (const auto& l : links) {
        adj[l.endpoint_a].push_back(l.endpoint_b);
        adj[l.endpoint_b].push_back(l.endpoint_a);
    }
    std::unordered_set<std::string> seen;
    std::queue<std::string> frontier;
    frontier.push(nodes[0].id);
    seen.insert(nodes[0].id);
    while (!frontier.empty()) {
        std::string u = frontier.front();
        frontier.pop();
        for (const auto& v : adj[u]) {
            if (seen.insert(v).second) frontier.push(v);
        }
    }
    return seen.size() == nodes.size();
}

Topology parse_topology(const std::string& document, ParseStats* stats) {
    TokenStream ts(tokenize(document));
    Topology topo;
    bool saw_nodes = false, saw_links = false;
    while (!ts.done()) {
        Token section = ts.next();
        if (is_paren(section.text)) {
            throw ParseError("expected section name, found '" + section.text + "'", section.line);
        }
        if (section.text == "NODES") {
            parse_nodes_section(ts, topo);
            saw_nodes = true;
        } else if (section.text == "LINKS") {
            parse_links_section(ts, topo, stats);
            saw_links = true;
        } else if (section.text == "DEMANDS") {
            std::map<std::pair<std::string, std::string>, double> ignored;
            parse_demands_section(ts, ignored, stats);
        } else {
            warn(stats, "ignoring section '" + section.text + "'");
            skip_balanced(ts);
        }
    }
    if (!saw_nodes || !saw_links) {
        throw ParseError("document lacks NODES or LINKS section", ts.line());
    }
    topo.validate();
    topo.connected = topo.compute_connected();
    return topo;
}

std::map<std::pair<std::string, std::string>, double> parse_demand_snapshot(
    const std::string& document, ParseStats* stats) {
    TokenStream ts(tokenize(document));
    std::map<std::pair<std::string, std::string>, double> out;
    bool saw_demands = false;
    while (!ts.done()) {
        Token section = ts.next();
        if (is_paren(section.text)) {
            throw ParseError("expected section name, found '" + section.text + "'", section.line);
        }
        if (section.text == "DEMANDS") {
            parse_demands_section(ts, out, stats);
            saw_demands = true;
        } else {
            skip_balanced(ts);
        }
    }
    if (!saw_demands) throw ParseError("document lacks a DEMANDS section", ts.line());
    return out;
}

std::vector<DemandSeries> parse_demand_archive(const std::vector<std::string>& documents,
                                               const std::vector<std::int64_t>& timestamps,
                                               const Topology* topology, ParseStats* stats) {
    if (documents.empty()) throw ValidationError("empty demand archive");
    if (documents.size() != timestamps.size()) {
        throw ValidationError("demand archive: " + std::to_string(documents.size()) +
                              " documents but " + std::to_string(timestamps.size()) +
                              " timestamps");
    }

    std::vector<std::size_t> order(documents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return timestamps[a] < timestamps[b]; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (timestamps[order[i]] == timestamps[order[i - 1]]) {
            throw ValidationError("demand archive: duplicate timestamp " +
                                  std::to_string(timestamps[order[i]]));
        }
    }

    std::vector<std::map<std::pair<std::string, std::string>, double>> snaps;
    snaps.reserve(order.size());
    std::set<std::pair<std::string, std::string>> pairs;
    for (std::size_t idx : order) {
        snaps.push_back(parse_demand_snapshot(documents[idx], stats));
        for (const auto& [key, value] : snaps.back()) pairs.insert(key);
    }

    if (topology) {
        for (const auto& [src, dst] : pairs) {
            if (!topology->has_node(src)) {
                throw ValidationError("demand references unknown node '" + src + "'");
            }
            if (!topology->has_node(dst)) {
                throw ValidationError("demand references unknown node '" + dst + "'");
            }
        }
    }

    std::vector<std::int64_t> sorted_ts;
    sorted_ts.reserve(order.size());
    for (std::size_t idx : order) sorted_ts.push_back(timestamps[idx]);
    const std::int64_t cadence = modal_cadence(sorted_ts);

    std::vector<DemandSeries> out;
    out.reserve(pairs.size());
    for (const auto& [src, dst] : pairs) {
        DemandSeries s;
        s.source = src;
        s.target = dst;
        s.timestamps = sorted_ts;
        s.cadence = cadence;
        s.values.resize(sorted_ts.size(), 0.0);
        s.gaps.resize(sorted_ts.size(), 0);
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            auto it = snaps[i].find({src, dst});
            if (it == snaps[i].end()) {
                s.gaps[i] = 1;
            } else {
                s.values[i] = it->second;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::optional<std::int64_t> timestamp_from_filename(const std::string& filename) {
    // Trailing "YYYYMMDD-HHMM" before the extension.
    std::string stem = filename;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) {
        stem = stem.substr(slash + 1);
    }
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) {
        stem = stem.substr(0, dot);
    }
    if (stem.size() < 13) return std::nullopt;
    const std::string tail = stem.substr(stem.size() - 13);
    if (tail[8] != '-') return std::nullopt;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        if (i == 8) continue;
        if (!std::isdigit(static_cast<unsigned char>(tail[i]))) return std::nullopt;
    }
    const int year = std::stoi(tail.substr(0, 4));
    const int month = std::stoi(tail.substr(4, 2));
    const int day = std::stoi(tail.substr(6, 2));
    const int hour = std::stoi(tail.substr(9, 2));
    const int minute = std::stoi(tail.substr(11, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59) {
        return std::nullopt;
    }
    return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60;
}

nlohmann::ordered_json topology_to_json(const Topology& t) {
    nlohmann::ordered_json j;
    j["schema"] = "slicecast.topology/1";
    j["name"] = t.name;
    j["connected"] = t.connected;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
        j["nodes"].push_back({{"id", n.id}, {"longitude", n.longitude}, {"latitude", n.latitude}});
    }
    j["links"] = nlohmann::ordered_json::array();
    for (const auto& l : t.links) {
        j["links"].push_back({{"id", l.id},
                              {"endpoint_a", l.endpoint_a},
                              {"endpoint_b", l.endpoint_b},
                              {"capacity", l.capacity},
                              {"routing_cost", l.routing_cost}});
    }
    return j;
}

Topology topology_from_json(const nlohmann::ordered_json& j) {
    Topology t;
    t.name = j.value("name", "");
    t.connected = j.value("connected", false);
    for (const auto& n : j.at("nodes")) {
        t.nodes.push_back({n.at("id").get<std::string>(), n.at("longitude").get<double>(),
                           n.at("latitude").get<double>()});
    }
    for (const auto& l : j.at("links")) {
        t.links.push_back({l.at("id").get<std::string>(), l.at("endpoint_a").get<std::string>(),
                           l.at("endpoint_b").get<std::string>(), l.at("capacity").get<double>(),
                           l.at("routing_cost").get<double>()});
    }
    t.validate();
    return t;
}

nlohmann::ordered_json demands_to_json(const std::vector<DemandSeries>& series) {
    nlohmann::ordered_json j;
    j["schema"] = "slicecast.demands/1";
    j["series"] = nlohmann::ordered_json::array();
    for (const auto& s : series) {
        nlohmann::ordered_json e;
        e["source"] = s.source;
        e["target"] = s.target;
        e["cadence_seconds"] = s.cadence;
        e["timestamps"] = s.timestamps;
        e["values"] = s.values;
        nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < s.gaps.size(); ++i) {
            if (s.gaps[i]) gaps.push_back(i);
        }
        e["gaps"] = std::move(gaps);
        j["series"].push_back(std::move(e));
    }
    return j;
}

std::vector<DemandSeries> demands_from_json(const nlohmann::ordered_json& j) {
    std::vector<DemandSeries> out;
    for (const auto& e : j.at("series")) {
        DemandSeries s;
        s.source = e.at("source").get<std::string>();
        s.target = e.at("target").get<std::string>();
        s.cadence = e.at("cadence_seconds").get<std::int64_t>();
        s.timestamps = e.at("timestamps").get<std::vector<std::int64_t>>();
        s.values = e.at("values").get<std::vector<double>>();
        s.gaps.assign(s.timestamps.size(), 0);
        for (const auto& idx : e.at("gaps")) s.gaps.at(idx.get<std::size_t>()) = 1;
        if (s.values.size() != s.timestamps.size()) {
            throw ValidationError("demand series " + s.column_id() +
                                  ": values and timestamps differ in length");
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace slicecast
