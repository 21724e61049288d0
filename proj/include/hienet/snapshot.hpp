#pragma once

#include "hienet/cascade.hpp"
#include "hienet/nn/tensor.hpp"

#include <utility>
#include <vector>

namespace hienet {

// Sinusoidal encoding of a discrete time step. dim must be even; elapsed
// times are discretised into bins equal-width steps over [0, window).
struct TemporalEncoding {
    std::size_t dim = 16;
    std::size_t bins = 512;

    void validate() const;
};

// PE[2d] = sin(t / 10000^(2d/dim)), PE[2d+1] = cos(t / 10000^(2d/dim)), d = 0..dim/2-1.
nn::Tensor temporal_positional_encoding(std::size_t t, const TemporalEncoding& enc);

std::size_t time_bin(Seconds elapsed, Seconds window, std::size_t bins);

// A prefix of the cascade's activation order. Local indices follow
// activation order, so the root is node 0.
struct Snapshot {
    std::vector<UserIndex> nodes;
    std::vector<Seconds> activation;
    std::vector<std::size_t> bins;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // local source -> local target
};

struct SnapshotSequence {
    std::vector<Snapshot> snapshots;
    std::size_t full_length = 0;           // m before capping
    std::vector<std::size_t> kept;         // 0-based positions in the full sequence
};

// Positions kept when m snapshots are capped to m_max: the first, the last and
// m_max - 2 evenly spaced ones in between. With m_max == 1 only the last
// (complete) snapshot is kept.
std::vector<std::size_t> snapshot_positions(std::size_t m, std::size_t m_max);

// Snapshot j (1-based) holds the root plus the first j - 1 observed retweets.
SnapshotSequence build_snapshots(const CascadeGraph& cascade, const TemporalEncoding& enc, std::size_t m_max);

struct SnapshotMatrices {
    nn::Tensor adjacency;  // n x n, 1 at (source, target)
    nn::Tensor features;   // n x dim, row i = PE(bin of node i)
};

SnapshotMatrices snapshot_feature_matrix(const Snapshot& snapshot, const TemporalEncoding& enc);

}  // namespace hienet
