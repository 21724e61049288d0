#pragma once

#include "hienet/nn/parameter.hpp"

#include <vector>

namespace hienet::nn {

struct AdamSettings {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update of one array; t is the 1-based step count.
// An empty grad is treated as zero.
void adam_update(Tensor& param, const Tensor& grad, Tensor& first_moment, Tensor& second_moment,
                 const AdamSettings& settings, long t);

class Adam {
public:
    explicit Adam(AdamSettings settings) : settings_(settings) {}

    void step(ParameterStore& store);
    long steps() const { return t_; }
    const AdamSettings& settings() const { return settings_; }

private:
    AdamSettings settings_;
    long t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace hienet::nn
