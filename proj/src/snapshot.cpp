#include "hienet/snapshot.hpp"

#include "hienet/errors.hpp"

#include <cmath>

namespace hienet {

void TemporalEncoding::validate() const {
    if (dim == 0 || dim % 2 != 0) throw ConfigError("temporal encoding dimension must be even and positive");
    if (bins == 0) throw ConfigError("temporal encoding needs at least one time bin");
}

nn::Tensor temporal_positional_encoding(std::size_t t, const TemporalEncoding& enc) {
    enc.validate();
    if (t >= enc.bins)
        throw std::out_of_range("time step " + std::to_string(t) + " outside [0, " + std::to_string(enc.bins) + ")");
    nn::Tensor pe(1, enc.dim);
    const double D = static_cast<double>(enc.dim);
    for (std::size_t d = 0; d < enc.dim / 2; ++d) {
        const double angle = static_cast<double>(t) / std::pow(10000.0, 2.0 * static_cast<double>(d) / D);
        pe[2 * d] = std::sin(angle);
        pe[2 * d + 1] = std::cos(angle);
    }
    return pe;
}

std::size_t time_bin(Seconds elapsed, Seconds window, std::size_t bins) {
    if (elapsed <= 0 || window <= 0) return 0;
    const auto b = static_cast<std::size_t>((static_cast<__int128>(elapsed) * bins) / window);
    return std::min(b, bins - 1);
}

std::vector<std::size_t> snapshot_positions(std::size_t m, std::size_t m_max) {
    if (m_max == 0) throw ConfigError("snapshot cap must be at least 1");
    std::vector<std::size_t> pos;
    if (m <= m_max) {
        for (std::size_t i = 0; i < m; ++i) pos.push_back(i);
        return pos;
    }
    if (m_max == 1) return {m - 1};
    const double step = static_cast<double>(m - 1) / static_cast<double>(m_max - 1);
    for (std::size_t j = 0; j < m_max; ++j) {
        auto p = static_cast<std::size_t>(std::round(step * static_cast<double>(j)));
        if (!pos.empty() && p <= pos.back()) p = pos.back() + 1;
        pos.push_back(p);
    }
    return pos;
}

SnapshotSequence build_snapshots(const CascadeGraph& cascade, const TemporalEncoding& enc, std::size_t m_max) {
    enc.validate();
    SnapshotSequence seq;
    seq.full_length = cascade.node_count();
    seq.kept = snapshot_positions(seq.full_length, m_max);

    std::vector<std::size_t> all_bins(cascade.node_count());
    for (std::size_t i = 0; i < all_bins.size(); ++i)
        all_bins[i] = time_bin(cascade.activation()[i], cascade.window(), enc.bins);

    for (std::size_t p : seq.kept) {
        const std::size_t n = p + 1;
        Snapshot s;
        s.nodes.assign(cascade.nodes().begin(), cascade.nodes().begin() + static_cast<std::ptrdiff_t>(n));
        s.activation.assign(cascade.activation().begin(), cascade.activation().begin() + static_cast<std::ptrdiff_t>(n));
        s.bins.assign(all_bins.begin(), all_bins.begin() + static_cast<std::ptrdiff_t>(n));
        // Edge k of the cascade graph activates node k + 1.
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const auto& e = cascade.edges()[k];
            s.edges.emplace_back(cascade.local_index(e.source), cascade.local_index(e.target));
        }
        seq.snapshots.push_back(std::move(s));
    }
    return seq;
}

SnapshotMatrices snapshot_feature_matrix(const Snapshot& snapshot, const TemporalEncoding& enc) {
    const std::size_t n = snapshot.nodes.size();
    SnapshotMatrices m{nn::Tensor(n, n), nn::Tensor(n, enc.dim)};
    for (auto [s, t] : snapshot.edges) m.adjacency(s, t) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto pe = temporal_positional_encoding(snapshot.bins[i], enc);
        for (std::size_t j = 0; j < enc.dim; ++j) m.features(i, j) = pe[j];
    }
    return m;
}

}  // namespace hienet
