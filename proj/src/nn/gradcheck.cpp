#include "hienet/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hienet::nn {

GradCheckResult check_gradients(const std::function<Var()>& loss, const std::vector<GradCheckInput>& inputs,
                                double step, double floor) {
    for (const auto& in : inputs) in.var.node()->grad = Tensor();
    backward(loss());

    GradCheckResult result;
    for (const auto& in : inputs) {
        Node& node = *in.var.node();
        const Tensor analytic = node.grad.empty() ? Tensor(node.value.shape()) : node.grad;
        for (std::size_t i = 0; i < node.value.size(); ++i) {
            const double orig = node.value[i];
            node.value[i] = orig + step;
            const double up = loss().item();
            node.value[i] = orig - step;
            const double down = loss().item();
            node.value[i] = orig;
            const double numeric = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
            const double rel = std::abs(analytic[i] - numeric) / denom;
            ++result.checked;
            if (rel > result.max_rel_error || result.worst.empty()) {
                result.max_rel_error = std::max(result.max_rel_error, rel);
                if (rel >= result.max_rel_error) result.worst = in.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

}  // namespace hienet::nn
