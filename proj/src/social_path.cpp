#include "hienet/social_path.hpp"

#include "hienet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace hienet {

std::optional<CorrelationPath> shortest_correlation_path(const GlobalSocialGraph& global, UserIndex u, UserIndex v) {
    if (!global.contains(u)) throw std::out_of_range("user " + std::to_string(u) + " is not in the social graph");
    if (!global.contains(v)) throw std::out_of_range("user " + std::to_string(v) + " is not in the social graph");
    if (u == v) return CorrelationPath{{u}};

    std::unordered_map<UserIndex, UserIndex> parent{{u, u}};
    std::deque<UserIndex> queue{u};
    while (!queue.empty()) {
        const UserIndex cur = queue.front();
        queue.pop_front();
        for (UserIndex next : global.neighbors(cur)) {
            if (!parent.emplace(next, cur).second) continue;
            if (next == v) {
                CorrelationPath path;
                for (UserIndex w = v; w != u; w = parent.at(w)) path.users.push_back(w);
                path.users.push_back(u);
                std::reverse(path.users.begin(), path.users.end());
                return path;
            }
            queue.push_back(next);
        }
    }
    return std::nullopt;
}

std::vector<double> path_weights(std::size_t hops, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("path weight alpha must lie in (0, 1)");
    const double norm = (1.0 - alpha) / (1.0 - std::pow(alpha, static_cast<double>(hops + 1)));
    std::vector<double> w(hops + 1);
    double a = 1.0;
    for (std::size_t i = 0; i <= hops; ++i, a *= alpha) w[i] = norm * a;
    return w;
}

nn::Tensor path_aware_representation(const CorrelationPath& path, const nn::Tensor& embeddings, double alpha) {
    const auto w = path_weights(path.hops(), alpha);
    nn::Tensor out(1, embeddings.cols());
    for (std::size_t i = 0; i < path.users.size(); ++i) {
        if (path.users[i] >= embeddings.rows())
            throw std::out_of_range("user " + std::to_string(path.users[i]) + " has no embedding row");
        for (std::size_t j = 0; j < embeddings.cols(); ++j) out[j] += w[i] * embeddings(path.users[i], j);
    }
    return out;
}

SocialPooling social_pooling(const CascadeGraph& cascade, const GlobalSocialGraph& global, double alpha,
                             std::size_t max_pairs) {
    auto edges = cascade.edges();
    std::stable_sort(edges.begin(), edges.end(), [](const CascadeEdge& a, const CascadeEdge& b) {
        if (a.elapsed != b.elapsed) return a.elapsed < b.elapsed;
        if (a.target != b.target) return a.target < b.target;
        return a.source < b.source;
    });

    std::map<UserIndex, double> mix;
    std::size_t used = 0;
    for (const auto& e : edges) {
        if (used == max_pairs) break;
        if (!global.contains(e.source) || !global.contains(e.target)) continue;
        auto path = shortest_correlation_path(global, e.source, e.target);
        if (!path) continue;
        const auto w = path_weights(path->hops(), alpha);
        const std::size_t n = path->users.size();
        // E^u walks the path forward, E^v walks it backward; each gets half.
        for (std::size_t i = 0; i < n; ++i) {
            mix[path->users[i]] += 0.5 * w[i];
            mix[path->users[n - 1 - i]] += 0.5 * w[i];
        }
        ++used;
    }

    SocialPooling pooling;
    pooling.pair_count = used;
    if (used == 0) {
        pooling.users = {cascade.root()};
        pooling.weights = {1.0};
        return pooling;
    }
    for (auto [user, weight] : mix) {
        pooling.users.push_back(user);
        pooling.weights.push_back(weight / static_cast<double>(used));
    }
    return pooling;
}

SocialFeature social_graph_feature(const SocialPooling& pooling, const nn::Var& embeddings,
                                   const std::function<std::size_t(UserIndex)>& row_of, const nn::Linear& projection) {
    std::vector<std::size_t> rows;
    rows.reserve(pooling.users.size());
    for (auto u : pooling.users) rows.push_back(row_of(u));
    return {projection(nn::weighted_row_sum(embeddings, rows, pooling.weights)), pooling.pair_count};
}

SocialFeature social_graph_feature(const CascadeGraph& cascade, const GlobalSocialGraph& global,
                                   const nn::Var& embeddings, const std::function<std::size_t(UserIndex)>& row_of,
                                   double alpha, std::size_t max_pairs, const nn::Linear& projection) {
    return social_graph_feature(social_pooling(cascade, global, alpha, max_pairs), embeddings, row_of, projection);
}

}  // namespace hienet
