#include "hienet/nn/parameter.hpp"

#include "hienet/errors.hpp"

namespace hienet::nn {

Parameter& ParameterStore::add(const std::string& name, Tensor init) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    params_.push_back(std::make_unique<Parameter>(Parameter{name, variable(std::move(init))}));
    return *params_.back();
}

Parameter& ParameterStore::add_uniform(const std::string& name, std::size_t rows, std::size_t cols, double bound,
                                       Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = uniform(rng, -bound, bound);
    return add(name, std::move(t));
}

Parameter& ParameterStore::add_normal(const std::string& name, std::size_t rows, std::size_t cols, double stddev,
                                      Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = normal(rng, 0.0, stddev);
    return add(name, std::move(t));
}

Parameter& ParameterStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
    return add(name, Tensor(rows, cols));
}

Parameter* ParameterStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Parameter& ParameterStore::at(const std::string& name) {
    auto* p = find(name);
    if (!p) throw ConfigError("unknown parameter: " + name);
    return *p;
}

std::vector<Parameter*> ParameterStore::all() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
    std::vector<const Parameter*> out;
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value().size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

}  // namespace hienet::nn
