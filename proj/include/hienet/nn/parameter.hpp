#pragma once

#include "hienet/nn/autodiff.hpp"
#include "hienet/rng.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hienet::nn {

struct Parameter {
    std::string name;
    Var var;

    const Tensor& value() const { return var.value(); }
    Tensor& mutable_value() { return var.node()->value; }
    const Tensor& grad() const { return var.node()->grad; }
    void zero_grad() { var.node()->grad = Tensor(); }
};

// Owns every trainable array of a model, in registration order. Names are
// unique; addresses are stable for the store's lifetime.
class ParameterStore {
public:
    Parameter& add(const std::string& name, Tensor init);
    Parameter& add_uniform(const std::string& name, std::size_t rows, std::size_t cols, double bound, Rng& rng);
    Parameter& add_normal(const std::string& name, std::size_t rows, std::size_t cols, double stddev, Rng& rng);
    Parameter& add_zeros(const std::string& name, std::size_t rows, std::size_t cols);

    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    Parameter& at(const std::string& name);

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace hienet::nn
