#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hienet {

using UserIndex = std::uint32_t;
using Seconds = std::int64_t;  // or years, per the dataset manifest

// Dense integer ids for raw user tokens, in first-seen order.
class UserInterner {
public:
    UserIndex intern(std::string_view name);
    std::optional<UserIndex> find(std::string_view name) const;
    const std::string& name(UserIndex id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    static UserInterner from_names(std::vector<std::string> names);

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, UserIndex> index_;
};

struct CascadeEvent {
    UserIndex retweeter = 0;
    std::optional<UserIndex> source;  // none for the root event
    Seconds elapsed = 0;

    friend bool operator==(const CascadeEvent&, const CascadeEvent&) = default;
};

struct CascadeRecord {
    std::string message_id;
    UserIndex root_user = 0;
    std::int64_t publish_time = 0;
    std::vector<CascadeEvent> events;  // events[0] is the root; sorted by elapsed
    std::int64_t final_size = 0;       // retweets (root excluded) at the label horizon

    // Non-root events with elapsed < window.
    std::size_t observed_count(Seconds window) const;
};

// One line of the tab-separated cascade format:
//   msg_id  root_user  publish_time  final_size  path( path)*
// where each path is u1/u2/.../uk:t and u1 is the root user. Each path
// contributes its terminal user; a repeated user keeps its earliest time.
CascadeRecord parse_cascade_line(std::string_view line, UserInterner& users, std::size_t line_number = 1);

// Canonical form: one path per event, in event order, each path rebuilt from
// the event's ancestor chain.
std::string serialize_cascade(const CascadeRecord& record, const UserInterner& users);

// Keeps only events observed before window; final_size is unchanged.
CascadeRecord truncate_to_window(const CascadeRecord& record, Seconds window);

struct CascadeEdge {
    UserIndex source = 0;
    UserIndex target = 0;
    Seconds elapsed = 0;  // activation time of target
};

// Observed part of one cascade. Nodes are kept in activation order, so the
// root has local index 0 and every edge points to a later node.
class CascadeGraph {
public:
    CascadeGraph() = default;
    CascadeGraph(UserIndex root, Seconds window);

    UserIndex root() const { return root_; }
    Seconds window() const { return window_; }
    const std::vector<UserIndex>& nodes() const { return nodes_; }
    const std::vector<Seconds>& activation() const { return activation_; }
    const std::vector<CascadeEdge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    bool contains(UserIndex user) const { return local_.count(user) != 0; }
    // Throws std::out_of_range for users outside the graph.
    std::size_t local_index(UserIndex user) const;
    // Local indices of out-neighbours, in activation order.
    const std::vector<std::size_t>& out_neighbors(std::size_t local) const { return out_.at(local); }
    std::size_t out_degree(std::size_t local) const { return out_.at(local).size(); }

    void add_node(UserIndex user, Seconds activation);
    void add_edge(UserIndex source, UserIndex target, Seconds elapsed);

private:
    UserIndex root_ = 0;
    Seconds window_ = 0;
    std::vector<UserIndex> nodes_;
    std::vector<Seconds> activation_;
    std::vector<CascadeEdge> edges_;
    std::vector<std::vector<std::size_t>> out_;
    std::unordered_map<UserIndex, std::size_t> local_;
};

CascadeGraph build_cascade_graph(const CascadeRecord& record, Seconds window);

// final_size minus observed retweets, clamped at 0 (with a warning on stderr).
std::int64_t compute_label(const CascadeRecord& record, Seconds window);

// Undirected union of every (source, retweeter) pair, no self-loops.
class GlobalSocialGraph {
public:
    const std::vector<UserIndex>& nodes() const { return nodes_; }
    bool contains(UserIndex user) const { return user < present_.size() && present_[user]; }
    // Sorted ascending. Empty for unknown users.
    std::span<const UserIndex> neighbors(UserIndex user) const;
    bool has_edge(UserIndex u, UserIndex v) const;
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const;

    static GlobalSocialGraph from_edges(std::vector<std::pair<UserIndex, UserIndex>> edges,
                                        std::span<const UserIndex> extra_nodes = {});

private:
    std::vector<UserIndex> nodes_;
    std::vector<char> present_;
    std::vector<std::vector<UserIndex>> adjacency_;
};

GlobalSocialGraph build_global_graph(std::span<const CascadeRecord> records);

}  // namespace hienet
