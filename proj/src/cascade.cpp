#include "hienet/cascade.hpp"

#include "hienet/errors.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace hienet {

UserIndex UserInterner::intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<UserIndex>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
}

std::optional<UserIndex> UserInterner::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

UserInterner UserInterner::from_names(std::vector<std::string> names) {
    UserInterner u;
    for (auto& n : names) {
        if (u.find(n)) throw DataError("duplicate user in interning table: " + n);
        u.intern(n);
    }
    return u;
}

std::size_t CascadeRecord::observed_count(Seconds window) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [window](const CascadeEvent& e) {
        return e.source.has_value() && e.elapsed < window;
    }));
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::int64_t parse_int(std::string_view text, std::size_t line, const char* field) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw ParseError(line, field, "expected an integer, got '" + std::string(text) + "'");
    return v;
}

struct RawPath {
    std::vector<std::string_view> users;
    Seconds time = 0;
    std::size_t order = 0;
};

}  // namespace

CascadeRecord parse_cascade_line(std::string_view line, UserInterner& users, std::size_t line_number) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    const auto fields = split(line, '\t');
    if (fields.size() != 5)
        throw ParseError(line_number, "line", "expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(line_number, "msg_id", "empty message id");
    if (fields[1].empty()) throw ParseError(line_number, "root_user", "empty root user");

    CascadeRecord rec;
    rec.message_id = std::string(fields[0]);
    rec.publish_time = parse_int(fields[2], line_number, "publish_time");
    rec.final_size = parse_int(fields[3], line_number, "final_size");
    if (rec.final_size < 0) throw ParseError(line_number, "final_size", "negative popularity");
    const std::string_view root_name = fields[1];

    std::vector<RawPath> paths;
    for (auto token : split(fields[4], ' ')) {
        if (token.empty()) continue;
        const auto colon = token.rfind(':');
        if (colon == std::string_view::npos)
            throw ParseError(line_number, "path", "missing ':time' in '" + std::string(token) + "'");
        RawPath p;
        p.time = parse_int(token.substr(colon + 1), line_number, "path time");
        if (p.time < 0) throw ParseError(line_number, "path time", "negative elapsed time");
        p.users = split(token.substr(0, colon), '/');
        for (auto u : p.users)
            if (u.empty()) throw ParseError(line_number, "path", "empty user in '" + std::string(token) + "'");
        if (p.users.front() != root_name)
            throw ParseError(line_number, "path",
                             "path '" + std::string(token) + "' does not start at root user '" +
                                 std::string(root_name) + "'");
        p.order = paths.size();
        paths.push_back(std::move(p));
    }

    // Earlier times first; among equal times, shorter paths first so that a
    // parent is placed before a child retweeting in the same second.
    std::sort(paths.begin(), paths.end(), [](const RawPath& a, const RawPath& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.users.size() != b.users.size()) return a.users.size() < b.users.size();
        return a.order < b.order;
    });

    rec.root_user = users.intern(root_name);
    rec.events.push_back({rec.root_user, std::nullopt, 0});
    std::unordered_set<std::string_view> seen{root_name};
    for (const auto& p : paths) {
        const auto terminal = p.users.back();
        if (seen.count(terminal)) continue;
        // Attach to the nearest ancestor on the path that is already active;
        // the root always is.
        std::string_view parent = root_name;
        for (std::size_t i = p.users.size() - 1; i-- > 0;) {
            if (seen.count(p.users[i])) {
                parent = p.users[i];
                break;
            }
        }
        seen.insert(terminal);
        rec.events.push_back({users.intern(terminal), users.intern(parent), p.time});
    }
    return rec;
}

std::string serialize_cascade(const CascadeRecord& record, const UserInterner& users) {
    std::unordered_map<UserIndex, std::optional<UserIndex>> parent;
    for (const auto& e : record.events) parent[e.retweeter] = e.source;

    std::string out = record.message_id + '\t' + users.name(record.root_user) + '\t' +
                      std::to_string(record.publish_time) + '\t' + std::to_string(record.final_size) + '\t';
    for (std::size_t i = 0; i < record.events.size(); ++i) {
        const auto& e = record.events[i];
        std::vector<UserIndex> chain{e.retweeter};
        for (auto p = e.source; p.has_value(); p = parent.at(*p)) chain.push_back(*p);
        if (i) out += ' ';
        for (std::size_t j = chain.size(); j-- > 0;) {
            out += users.name(chain[j]);
            if (j) out += '/';
        }
        out += ':' + std::to_string(e.elapsed);
    }
    return out;
}

CascadeRecord truncate_to_window(const CascadeRecord& record, Seconds window) {
    CascadeRecord out = record;
    out.events.clear();
    for (const auto& e : record.events)
        if (!e.source || e.elapsed < window) out.events.push_back(e);
    return out;
}

CascadeGraph::CascadeGraph(UserIndex root, Seconds window) : root_(root), window_(window) { add_node(root, 0); }

std::size_t CascadeGraph::local_index(UserIndex user) const {
    auto it = local_.find(user);
    if (it == local_.end()) throw std::out_of_range("user " + std::to_string(user) + " is not in the cascade graph");
    return it->second;
}

void CascadeGraph::add_node(UserIndex user, Seconds activation) {
    if (local_.count(user)) return;
    local_.emplace(user, nodes_.size());
    nodes_.push_back(user);
    activation_.push_back(activation);
    out_.emplace_back();
}

void CascadeGraph::add_edge(UserIndex source, UserIndex target, Seconds elapsed) {
    edges_.push_back({source, target, elapsed});
    out_[local_index(source)].push_back(local_index(target));
}

CascadeGraph build_cascade_graph(const CascadeRecord& record, Seconds window) {
    if (window <= 0) throw ConfigError("observation window must be positive");
    CascadeGraph g(record.root_user, window);
    for (const auto& e : record.events) {
        if (!e.source || e.elapsed >= window) continue;
        if (!g.contains(*e.source) || g.contains(e.retweeter)) continue;
        g.add_node(e.retweeter, e.elapsed);
        g.add_edge(*e.source, e.retweeter, e.elapsed);
    }
    return g;
}

std::int64_t compute_label(const CascadeRecord& record, Seconds window) {
    if (window <= 0) throw ConfigError("observation window must be positive");
    const auto observed = static_cast<std::int64_t>(record.observed_count(window));
    const std::int64_t delta = record.final_size - observed;
    if (delta < 0) {
        std::cerr << "warning: cascade " << record.message_id << " has final_size " << record.final_size
                  << " below its " << observed << " observed retweets; label clamped to 0\n";
        return 0;
    }
    return delta;
}

std::span<const UserIndex> GlobalSocialGraph::neighbors(UserIndex user) const {
    if (!contains(user)) return {};
    return adjacency_[user];
}

bool GlobalSocialGraph::has_edge(UserIndex u, UserIndex v) const {
    auto n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
}

std::size_t GlobalSocialGraph::edge_count() const {
    std::size_t twice = 0;
    for (const auto& a : adjacency_) twice += a.size();
    return twice / 2;
}

GlobalSocialGraph GlobalSocialGraph::from_edges(std::vector<std::pair<UserIndex, UserIndex>> edges,
                                                std::span<const UserIndex> extra_nodes) {
    GlobalSocialGraph g;
    UserIndex max_id = 0;
    bool any = !extra_nodes.empty();
    for (auto u : extra_nodes) max_id = std::max(max_id, u);
    for (auto [u, v] : edges) {
        max_id = std::max({max_id, u, v});
        any = true;
    }
    if (!any) return g;
    g.present_.assign(static_cast<std::size_t>(max_id) + 1, 0);
    g.adjacency_.resize(static_cast<std::size_t>(max_id) + 1);
    for (auto u : extra_nodes) g.present_[u] = 1;
    for (auto [u, v] : edges) {
        g.present_[u] = g.present_[v] = 1;
        if (u == v) continue;
        g.adjacency_[u].push_back(v);
        g.adjacency_[v].push_back(u);
    }
    for (auto& a : g.adjacency_) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    for (std::size_t u = 0; u < g.present_.size(); ++u)
        if (g.present_[u]) g.nodes_.push_back(static_cast<UserIndex>(u));
    return g;
}

GlobalSocialGraph build_global_graph(std::span<const CascadeRecord> records) {
    std::vector<std::pair<UserIndex, UserIndex>> edges;
    std::vector<UserIndex> roots;
    for (const auto& r : records) {
        roots.push_back(r.root_user);
        for (const auto& e : r.events)
            if (e.source) edges.emplace_back(*e.source, e.retweeter);
    }
    return GlobalSocialGraph::from_edges(std::move(edges), roots);
}

}  // namespace hienet
