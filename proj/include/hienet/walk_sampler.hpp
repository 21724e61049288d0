#pragma once

#include "hienet/cascade.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace hienet {

inline constexpr UserIndex kPad = std::numeric_limits<UserIndex>::max();

// K walks of exactly N entries over a cascade graph. Entries are user ids;
// once a walk hits a node without out-neighbours the rest is kPad.
struct WalkBatch {
    std::vector<std::vector<UserIndex>> walks;
    std::size_t walks_per_cascade = 0;
    std::size_t walk_length = 0;
    double beta = 0.8;
};

// Start probabilities over graph nodes (activation order):
// (out_degree(v) + beta) / sum_w (out_degree(w) + beta).
std::vector<double> start_distribution(const CascadeGraph& graph, double beta);

// Probabilities over out_neighbors(v), same smoothing. Empty for leaves.
// v is a user id; throws std::out_of_range if it is not in the graph.
std::vector<double> transition_distribution(const CascadeGraph& graph, UserIndex v, double beta);

WalkBatch sample_walks(const CascadeGraph& graph, std::size_t walks, std::size_t length, double beta,
                       std::uint64_t seed);

// One walk per line, ids space-separated, '-' for PAD.
std::string format_walks(const WalkBatch& batch, const UserInterner* users = nullptr);

}  // namespace hienet
