#include "hienet/nn/layers.hpp"

#include "hienet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hienet::nn {

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear l;
    l.weight = &store.add_uniform(name + ".weight", in, out, bound, rng);
    l.bias = &store.add_zeros(name + ".bias", 1, out);
    return l;
}

Var Linear::operator()(const Var& x) const { return add_row(matmul(x, weight->var), bias->var); }

LstmCell LstmCell::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                          Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmCell cell;
    cell.input_weight = &store.add_uniform(name + ".w_ih", in, 4 * hidden, k, rng);
    cell.recurrent_weight = &store.add_uniform(name + ".w_hh", hidden, 4 * hidden, k, rng);
    cell.bias = &store.add_uniform(name + ".bias", 1, 4 * hidden, k, rng);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) cell.bias->mutable_value()[j] += 1.0;
    return cell;
}

LstmState LstmCell::initial_state(std::size_t batch) const {
    return {constant(Tensor(batch, hidden())), constant(Tensor(batch, hidden()))};
}

LstmState LstmCell::step(const Var& x, const LstmState& prev, const Tensor& mask) const {
    if (x.cols() != input_weight->value().rows())
        throw ShapeError("lstm: input width " + std::to_string(x.cols()) + " does not match cell input " +
                         std::to_string(input_weight->value().rows()));
    bool any_real = mask.empty();
    bool all_real = mask.empty();
    if (!mask.empty()) {
        if (mask.rows() != x.rows()) throw ShapeError("lstm: mask rows do not match batch");
        auto m = mask.data();
        any_real = std::any_of(m.begin(), m.end(), [](double v) { return v != 0.0; });
        all_real = std::all_of(m.begin(), m.end(), [](double v) { return v == 1.0; });
    }
    if (!any_real) return prev;

    const std::size_t H = hidden();
    Var gates = add_row(add(matmul(x, input_weight->var), matmul(prev.h, recurrent_weight->var)), bias->var);
    Var i = sigmoid(slice_cols(gates, 0, H));
    Var f = sigmoid(slice_cols(gates, H, H));
    Var g = tanh(slice_cols(gates, 2 * H, H));
    Var o = sigmoid(slice_cols(gates, 3 * H, H));
    Var c = add(mul(f, prev.c), mul(i, g));
    Var h = mul(o, tanh(c));
    if (all_real) return {h, c};

    Tensor keep(mask.shape());
    for (std::size_t r = 0; r < mask.size(); ++r) keep[r] = 1.0 - mask[r];
    Var m = constant(mask);
    Var k = constant(std::move(keep));
    return {add(mul_col(h, m), mul_col(prev.h, k)), add(mul_col(c, m), mul_col(prev.c, k))};
}

BiLstm BiLstm::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
    return {LstmCell::create(store, name + ".fwd", in, hidden, rng),
            LstmCell::create(store, name + ".bwd", in, hidden, rng)};
}

BiLstmOutput BiLstm::operator()(const std::vector<Var>& steps, const std::vector<Tensor>& masks) const {
    if (steps.empty()) throw ShapeError("bilstm: empty sequence");
    if (!masks.empty() && masks.size() != steps.size()) throw ShapeError("bilstm: mask count does not match steps");
    const std::size_t T = steps.size();
    const std::size_t batch = steps[0].rows();
    static const Tensor no_mask;
    auto mask_at = [&](std::size_t t) -> const Tensor& { return masks.empty() ? no_mask : masks[t]; };

    BiLstmOutput out;
    out.forward_states.resize(T);
    out.backward_states.resize(T);
    LstmState s = forward_cell.initial_state(batch);
    for (std::size_t t = 0; t < T; ++t) {
        s = forward_cell.step(steps[t], s, mask_at(t));
        out.forward_states[t] = s.h;
    }
    out.final_forward = s.h;
    s = backward_cell.initial_state(batch);
    for (std::size_t t = T; t-- > 0;) {
        s = backward_cell.step(steps[t], s, mask_at(t));
        out.backward_states[t] = s.h;
    }
    out.final_backward = s.h;
    return out;
}

Var activate(const Var& x, Activation act) {
    switch (act) {
        case Activation::Relu: return relu(x);
        case Activation::Tanh: return tanh(x);
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::Linear: break;
    }
    return x;
}

Tensor gcn_propagation(const Tensor& adjacency) {
    if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols())
        throw ShapeError("gcn: adjacency must be square, got " + adjacency.shape_str());
    const std::size_t n = adjacency.rows();
    Tensor p = adjacency;
    for (std::size_t i = 0; i < n; ++i) p(i, i) += 1.0;
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += p(i, j);
        inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    return p;
}

SparseMatrix gcn_propagation(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<double> degree(n, 1.0);
    for (auto [s, t] : edges) {
        if (s >= n || t >= n) throw ShapeError("gcn: edge endpoint out of range");
        degree[s] += 1.0;
    }
    SparseMatrix p;
    p.rows = p.cols = n;
    for (std::size_t i = 0; i < n; ++i) p.insert(i, i, 1.0 / degree[i]);
    for (auto [s, t] : edges) p.insert(s, t, 1.0 / std::sqrt(degree[s] * degree[t]));
    return p;
}

Var gcn_propagate(const SparseMatrix& propagation, const Var& features, const Var& weight, Activation act) {
    if (propagation.cols != features.rows())
        throw ShapeError("gcn: propagation does not match features " + features.value().shape_str());
    return activate(spmm(propagation, matmul(features, weight)), act);
}

Var gcn_propagate(const Tensor& propagation, const Var& features, const Var& weight, Activation act) {
    if (propagation.rows() != features.rows())
        throw ShapeError("gcn: propagation " + propagation.shape_str() + " does not match features " +
                         features.value().shape_str());
    return activate(matmul(constant(propagation), matmul(features, weight)), act);
}

Var gcn_layer(const Tensor& adjacency, const Var& features, const Var& weight, Activation act) {
    return gcn_propagate(gcn_propagation(adjacency), features, weight, act);
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, std::size_t dim) {
    return {&store.add(name + ".gain", Tensor(1, dim, 1.0)), &store.add_zeros(name + ".shift", 1, dim)};
}

Var LayerNorm::operator()(const Var& x) const { return add_row(mul_row(normalize_rows(x), gain->var), shift->var); }

TransformerEncoderLayer TransformerEncoderLayer::create(ParameterStore& store, const std::string& name,
                                                        std::size_t dim, std::size_t heads, std::size_t ff_dim,
                                                        Rng& rng) {
    if (heads == 0 || dim % heads != 0)
        throw ConfigError("attention: width " + std::to_string(dim) + " is not divisible by " +
                          std::to_string(heads) + " heads");
    TransformerEncoderLayer t;
    t.heads = heads;
    t.query = Linear::create(store, name + ".query", dim, dim, rng);
    t.key = Linear::create(store, name + ".key", dim, dim, rng);
    t.value = Linear::create(store, name + ".value", dim, dim, rng);
    t.output = Linear::create(store, name + ".output", dim, dim, rng);
    t.attention_norm = LayerNorm::create(store, name + ".attention_norm", dim);
    t.ff_in = Linear::create(store, name + ".ff_in", dim, ff_dim, rng);
    t.ff_out = Linear::create(store, name + ".ff_out", ff_dim, dim, rng);
    t.ff_norm = LayerNorm::create(store, name + ".ff_norm", dim);
    return t;
}

Var TransformerEncoderLayer::attention(const Var& tokens) const {
    const std::size_t dim = tokens.cols();
    const std::size_t head_dim = dim / heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Var q = query(tokens);
    Var k = key(tokens);
    Var v = value(tokens);
    std::vector<Var> per_head;
    per_head.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Var qh = slice_cols(q, h * head_dim, head_dim);
        Var kh = slice_cols(k, h * head_dim, head_dim);
        Var vh = slice_cols(v, h * head_dim, head_dim);
        Var weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv_scale));
        per_head.push_back(matmul(weights, vh));
    }
    return output(heads == 1 ? per_head[0] : concat_cols(per_head));
}

Var TransformerEncoderLayer::operator()(const Var& tokens) const {
    Var x = attention_norm(add(tokens, attention(tokens)));
    return ff_norm(add(x, ff_out(relu(ff_in(x)))));
}

Mlp Mlp::create(ParameterStore& store, const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
                std::size_t out, Rng& rng) {
    Mlp m;
    std::size_t width = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        m.layers.push_back(Linear::create(store, name + "." + std::to_string(i), width, hidden[i], rng));
        width = hidden[i];
    }
    m.layers.push_back(Linear::create(store, name + ".out", width, out, rng));
    return m;
}

Var Mlp::operator()(const Var& x) const {
    Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i](h);
        if (i + 1 < layers.size()) h = relu(h);
    }
    return h;
}

}  // namespace hienet::nn
