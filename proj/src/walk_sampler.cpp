#include "hienet/walk_sampler.hpp"

#include "hienet/errors.hpp"
#include "hienet/rng.hpp"

namespace hienet {

namespace {

void check_beta(double beta) {
    if (!(beta > 0.0)) throw ConfigError("walk smoothing beta must be positive");
}

std::vector<double> normalized(std::vector<double> w) {
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

std::size_t draw(const std::vector<double>& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

std::vector<double> transition_from_local(const CascadeGraph& graph, std::size_t local, double beta) {
    const auto& next = graph.out_neighbors(local);
    std::vector<double> w;
    w.reserve(next.size());
    for (auto u : next) w.push_back(static_cast<double>(graph.out_degree(u)) + beta);
    return w.empty() ? w : normalized(std::move(w));
}

}  // namespace

std::vector<double> start_distribution(const CascadeGraph& graph, double beta) {
    check_beta(beta);
    if (graph.node_count() == 0) throw ConfigError("start distribution of an empty graph");
    std::vector<double> w(graph.node_count());
    for (std::size_t v = 0; v < w.size(); ++v) w[v] = static_cast<double>(graph.out_degree(v)) + beta;
    return normalized(std::move(w));
}

std::vector<double> transition_distribution(const CascadeGraph& graph, UserIndex v, double beta) {
    check_beta(beta);
    return transition_from_local(graph, graph.local_index(v), beta);
}

WalkBatch sample_walks(const CascadeGraph& graph, std::size_t walks, std::size_t length, double beta,
                       std::uint64_t seed) {
    if (walks == 0 || length == 0) throw ConfigError("walk count and length must be at least 1");
    const auto start = start_distribution(graph, beta);
    std::vector<std::vector<double>> transitions(graph.node_count());
    for (std::size_t v = 0; v < graph.node_count(); ++v) transitions[v] = transition_from_local(graph, v, beta);

    Rng rng(seed);
    WalkBatch batch;
    batch.walks_per_cascade = walks;
    batch.walk_length = length;
    batch.beta = beta;
    batch.walks.assign(walks, std::vector<UserIndex>(length, kPad));
    for (auto& walk : batch.walks) {
        std::size_t cur = draw(start, rng);
        walk[0] = graph.nodes()[cur];
        for (std::size_t t = 1; t < length; ++t) {
            const auto& p = transitions[cur];
            if (p.empty()) break;
            cur = graph.out_neighbors(cur)[draw(p, rng)];
            walk[t] = graph.nodes()[cur];
        }
    }
    return batch;
}

std::string format_walks(const WalkBatch& batch, const UserInterner* users) {
    std::string out;
    for (const auto& walk : batch.walks) {
        for (std::size_t i = 0; i < walk.size(); ++i) {
            if (i) out += ' ';
            if (walk[i] == kPad)
                out += '-';
            else
                out += users ? users->name(walk[i]) : std::to_string(walk[i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace hienet
