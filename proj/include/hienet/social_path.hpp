#pragma once

#include "hienet/cascade.hpp"
#include "hienet/nn/autodiff.hpp"
#include "hienet/nn/layers.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace hienet {

struct CorrelationPath {
    std::vector<UserIndex> users;  // w_0 = u ... w_n = v

    std::size_t hops() const { return users.empty() ? 0 : users.size() - 1; }
};

// Minimum-hop path by BFS over ascending neighbour lists, which yields the
// lexicographically smallest shortest path. nullopt when disconnected; throws
// std::out_of_range for users outside the graph.
std::optional<CorrelationPath> shortest_correlation_path(const GlobalSocialGraph& global, UserIndex u, UserIndex v);

// Geometric weights (1 - a) / (1 - a^(n+1)) * a^i for i = 0..hops.
std::vector<double> path_weights(std::size_t hops, double alpha);

// Weighted average of embedding rows along the path; table rows are indexed by
// user id.
nn::Tensor path_aware_representation(const CorrelationPath& path, const nn::Tensor& embeddings, double alpha);

struct SocialPairSelection {
    std::vector<std::pair<UserIndex, UserIndex>> pairs;  // pairs that had a path
    std::size_t skipped = 0;
};

// Linear pooling of the social feature: pooled = sum_k weight_k * g[user_k].
// Sorted by user id, weights sum to 1.
struct SocialPooling {
    std::vector<UserIndex> users;
    std::vector<double> weights;
    std::size_t pair_count = 0;  // 0 means the root fallback was used
};

// Up to max_pairs earliest (source, retweeter) pairs ordered by event time then
// user index. For each pair the endpoints' path-aware representations along
// their correlation path are averaged; pairs are then averaged. Disconnected
// pairs are skipped and an empty selection falls back to the root's own
// embedding. Everything is linear in the embeddings, so the result is returned
// as mixing weights.
SocialPooling social_pooling(const CascadeGraph& cascade, const GlobalSocialGraph& global, double alpha,
                             std::size_t max_pairs);

struct SocialFeature {
    nn::Var vector;  // 1 x projection width
    std::size_t pair_count = 0;
};

// Projects the pooled path-aware representation. row_of maps a user id to its
// row of the embedding table.
SocialFeature social_graph_feature(const SocialPooling& pooling, const nn::Var& embeddings,
                                   const std::function<std::size_t(UserIndex)>& row_of, const nn::Linear& projection);

SocialFeature social_graph_feature(const CascadeGraph& cascade, const GlobalSocialGraph& global,
                                   const nn::Var& embeddings, const std::function<std::size_t(UserIndex)>& row_of,
                                   double alpha, std::size_t max_pairs, const nn::Linear& projection);

}  // namespace hienet
