#include "hienet/nn/optim.hpp"

#include <cmath>

namespace hienet::nn {

void adam_update(Tensor& param, const Tensor& grad, Tensor& first_moment, Tensor& second_moment,
                 const AdamSettings& s, long t) {
    if (first_moment.empty()) first_moment = Tensor(param.shape());
    if (second_moment.empty()) second_moment = Tensor(param.shape());
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
    auto p = param.data();
    auto m = first_moment.data();
    auto v = second_moment.data();
    const bool has_grad = !grad.empty();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = has_grad ? grad[i] : 0.0;
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
        if (m[i] == 0.0) continue;
        p[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
    }
}

void Adam::step(ParameterStore& store) {
    auto params = store.all();
    m_.resize(params.size());
    v_.resize(params.size());
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i)
        adam_update(params[i]->mutable_value(), params[i]->grad(), m_[i], v_[i], settings_, t_);
}

}  // namespace hienet::nn
