#pragma once

#include "hienet/nn/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hienet::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // "<input name>[<flat index>]"
    std::size_t checked = 0;
};

struct GradCheckInput {
    std::string name;
    Var var;  // must be a leaf created with variable()
};

// Compares backward gradients of loss() against central differences.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult check_gradients(const std::function<Var()>& loss, const std::vector<GradCheckInput>& inputs,
                                double step = 1e-5, double floor = 1e-4);

}  // namespace hienet::nn
