#pragma once

#include "hienet/dataset.hpp"

#include <cstdint>

namespace hienet {

inline constexpr int kMaxResamples = 1000;

// Desk-scale stand-in for a retweet corpus. Users live on a preferential
// attachment graph; each cascade is a continuous-time independent cascade
// whose per-user infection probability decays exponentially with time and
// scales with the spreading user's influence.
struct SyntheticSpec {
    std::size_t num_users = 1000;
    std::size_t num_cascades = 200;
    std::size_t attachment = 3;       // edges added per new user
    double mean_branching = 1.5;      // expected offspring per infected user at t = 0
    double branching_spread = 0.8;    // lognormal sigma of the per-cascade virality multiplier
    double influence_spread = 1.0;    // lognormal sigma of the per-user influence multiplier
    double decay_rate = 1.0 / 2000.0; // per second
    double mean_delay = 900.0;        // seconds between exposure and retweet
    std::int64_t window = 3600;       // observation window stored in the manifest
    std::int64_t horizon = 86400;     // label horizon
    std::size_t max_size = 500;       // retweet cap per cascade
    std::size_t min_observed = 5;     // resample cascades with fewer retweets inside the window
    std::uint64_t seed = 1;

    void validate() const;
};

// Records are fully consistent: final_size equals the number of retweets
// before the horizon. A cascade that still misses min_observed after
// kMaxResamples draws is kept as is. Records pass through the text form, so
// users are interned in first-seen order exactly as load_dataset would.
// The manifest records the spec and size statistics.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace hienet
