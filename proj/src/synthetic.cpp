#include "hienet/synthetic.hpp"

#include "hienet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace hienet {

void SyntheticSpec::validate() const {
    if (num_users < 2) throw ConfigError("synthetic: need at least 2 users");
    if (num_cascades == 0) throw ConfigError("synthetic: need at least 1 cascade");
    if (attachment == 0) throw ConfigError("synthetic: attachment must be at least 1");
    if (mean_branching < 0.0 || branching_spread < 0.0 || influence_spread < 0.0) throw ConfigError("synthetic: branching must be non-negative");
    if (!(decay_rate >= 0.0) || !(mean_delay > 0.0)) throw ConfigError("synthetic: invalid time constants");
    if (window <= 0 || horizon <= window) throw ConfigError("synthetic: need 0 < window < horizon");
}

namespace {

std::vector<std::vector<UserIndex>> preferential_attachment(std::size_t n, std::size_t m, Rng& rng) {
    std::vector<std::vector<UserIndex>> adj(n);
    std::vector<UserIndex> endpoints;  // each node appears once per incident edge
    const std::size_t seed_nodes = std::min(n, m + 1);
    for (std::size_t i = 0; i < seed_nodes; ++i)
        for (std::size_t j = i + 1; j < seed_nodes; ++j) {
            adj[i].push_back(static_cast<UserIndex>(j));
            adj[j].push_back(static_cast<UserIndex>(i));
            endpoints.push_back(static_cast<UserIndex>(i));
            endpoints.push_back(static_cast<UserIndex>(j));
        }
    for (std::size_t v = seed_nodes; v < n; ++v) {
        std::vector<UserIndex> targets;
        while (targets.size() < m) {
            const UserIndex t = endpoints[uniform_index(rng, endpoints.size())];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        for (UserIndex t : targets) {
            adj[v].push_back(t);
            adj[t].push_back(static_cast<UserIndex>(v));
            endpoints.push_back(t);
            endpoints.push_back(static_cast<UserIndex>(v));
        }
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

struct Exposure {
    double time;
    UserIndex user;
    UserIndex source;
    bool operator>(const Exposure& o) const {
        if (time != o.time) return time > o.time;
        return user > o.user;
    }
};

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(splitmix64(spec.seed));
    const auto social = preferential_attachment(spec.num_users, spec.attachment, rng);

    std::vector<double> influence(spec.num_users);
    for (auto& w : influence)
        w = std::exp(normal(rng, 0.0, spec.influence_spread) - 0.5 * spec.influence_spread * spec.influence_spread);

    Dataset d;
    UserInterner raw_users;
    for (std::size_t u = 0; u < spec.num_users; ++u) raw_users.intern("u" + std::to_string(u));

    auto simulate = [&](std::size_t c) {
        const double virality = std::exp(normal(rng, 0.0, spec.branching_spread) -
                                         0.5 * spec.branching_spread * spec.branching_spread);
        const double branching = spec.mean_branching * virality;
        const auto root = static_cast<UserIndex>(uniform_index(rng, spec.num_users));

        CascadeRecord rec;
        rec.message_id = "m" + std::to_string(c);
        rec.root_user = root;
        rec.publish_time = 1'500'000'000 + static_cast<std::int64_t>(c) * 600;
        rec.events.push_back({root, std::nullopt, 0});

        std::vector<char> infected(spec.num_users, 0);
        infected[root] = 1;
        std::priority_queue<Exposure, std::vector<Exposure>, std::greater<>> pending;
        auto expose_neighbors = [&](UserIndex u, double t) {
            const auto& nbrs = social[u];
            const double p = std::min(1.0, branching * influence[u] * std::exp(-spec.decay_rate * t) / static_cast<double>(nbrs.size()));
            for (UserIndex w : nbrs) {
                if (uniform01(rng) >= p) continue;
                const double at = t + exponential(rng, 1.0 / spec.mean_delay);
                if (at < static_cast<double>(spec.horizon)) pending.push({at, w, u});
            }
        };
        expose_neighbors(root, 0.0);
        while (!pending.empty() && rec.events.size() <= spec.max_size) {
            const Exposure e = pending.top();
            pending.pop();
            if (infected[e.user]) continue;
            infected[e.user] = 1;
            rec.events.push_back({e.user, e.source, static_cast<Seconds>(std::floor(e.time))});
            expose_neighbors(e.user, e.time);
        }
        return rec;
    };

    std::vector<std::int64_t> sizes;
    for (std::size_t c = 0; c < spec.num_cascades; ++c) {
        CascadeRecord rec;
        for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
            rec = simulate(c);
            if (rec.observed_count(spec.window) >= spec.min_observed) break;
        }
        rec.final_size = static_cast<std::int64_t>(rec.events.size()) - 1;
        sizes.push_back(rec.final_size);
        d.records.push_back(parse_cascade_line(serialize_cascade(rec, raw_users), d.users, c + 1));
    }

    std::vector<std::int64_t> sorted = sizes;
    std::sort(sorted.begin(), sorted.end());
    const auto median = sorted[(sorted.size() - 1) / 2];
    const auto max = sorted.back();

    d.manifest.time_unit = "seconds";
    d.manifest.label_horizon = spec.horizon;
    d.manifest.extra = {
        {"generator", "synthetic-independent-cascade"},
        {"window", spec.window},
        {"spec",
         {{"num_users", spec.num_users},
          {"num_cascades", spec.num_cascades},
          {"attachment", spec.attachment},
          {"mean_branching", spec.mean_branching},
          {"branching_spread", spec.branching_spread},
          {"influence_spread", spec.influence_spread},
          {"decay_rate", spec.decay_rate},
          {"mean_delay", spec.mean_delay},
          {"max_size", spec.max_size},
          {"min_observed", spec.min_observed},
          {"window", spec.window},
          {"horizon", spec.horizon},
          {"seed", spec.seed}}},
        {"final_size", {{"median", median}, {"max", max}, {"max_over_median", median > 0 ? double(max) / double(median) : 0.0}}},
        {"heavy_tail_threshold", 5.0},
    };
    return d;
}

}  // namespace hienet
