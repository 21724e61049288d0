#pragma once

#include "hienet/nn/gradcheck.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hienet {

struct GradientReport {
    std::string layer;
    nn::GradCheckResult result;
};

// Finite-difference checks (step 1e-5) of every autodiff primitive, the
// BiLSTM, GCN and attention layers, and the end-to-end loss of a small model
// on a three-cascade toy corpus. Shapes and values are drawn from seed.
std::vector<GradientReport> run_gradient_suite(std::uint64_t seed);

inline constexpr double kGradientTolerance = 1e-4;

}  // namespace hienet
