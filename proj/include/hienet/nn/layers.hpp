#pragma once

#include "hienet/nn/autodiff.hpp"
#include "hienet/nn/parameter.hpp"

#include <string>
#include <vector>

namespace hienet::nn {

struct Linear {
    Parameter* weight = nullptr;  // in x out
    Parameter* bias = nullptr;    // 1 x out

    static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);

    std::size_t in_dim() const { return weight->value().rows(); }
    std::size_t out_dim() const { return weight->value().cols(); }
    Var operator()(const Var& x) const;
};

struct LstmState {
    Var h;
    Var c;
};

// Gate layout along the 4H axis: input, forget, cell, output.
struct LstmCell {
    Parameter* input_weight = nullptr;      // in x 4H
    Parameter* recurrent_weight = nullptr;  // H x 4H
    Parameter* bias = nullptr;              // 1 x 4H

    static LstmCell create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

    std::size_t hidden() const { return recurrent_weight->value().rows(); }
    LstmState initial_state(std::size_t batch) const;
    // mask is batch x 1 with 1 for real steps and 0 for PAD; a PAD step keeps
    // the previous state. An empty mask means every row is real.
    LstmState step(const Var& x, const LstmState& prev, const Tensor& mask = {}) const;
};

struct BiLstmOutput {
    std::vector<Var> forward_states;   // per step, batch x H
    std::vector<Var> backward_states;  // per step, batch x H
    Var final_forward;
    Var final_backward;

    // batch x 2H hidden state at step t.
    Var hidden(std::size_t t) const { return concat_cols({forward_states[t], backward_states[t]}); }
    // batch x 2H concat of the two final states.
    Var final_concat() const { return concat_cols({final_forward, final_backward}); }
};

struct BiLstm {
    LstmCell forward_cell;
    LstmCell backward_cell;

    static BiLstm create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

    std::size_t hidden() const { return forward_cell.hidden(); }
    // steps[t] is batch x in; masks is either empty or one batch x 1 mask per step.
    BiLstmOutput operator()(const std::vector<Var>& steps, const std::vector<Tensor>& masks = {}) const;
};

enum class Activation { Linear, Relu, Tanh, Sigmoid };

Var activate(const Var& x, Activation act);

// D^-1/2 (A + I) D^-1/2 where D holds the row sums of A + I.
Tensor gcn_propagation(const Tensor& adjacency);

// Sparse form built from a directed edge list over n nodes.
SparseMatrix gcn_propagation(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

Var gcn_layer(const Tensor& adjacency, const Var& features, const Var& weight, Activation act);
// Same as gcn_layer with the propagation matrix already computed.
Var gcn_propagate(const Tensor& propagation, const Var& features, const Var& weight, Activation act);
Var gcn_propagate(const SparseMatrix& propagation, const Var& features, const Var& weight, Activation act);

struct LayerNorm {
    Parameter* gain = nullptr;
    Parameter* shift = nullptr;

    static LayerNorm create(ParameterStore& store, const std::string& name, std::size_t dim);
    Var operator()(const Var& x) const;
};

// One post-norm transformer encoder layer: multi-head self-attention and a
// position-wise feed-forward block, each wrapped in residual + layer norm.
// No positional information is added, so the layer is permutation-equivariant.
struct TransformerEncoderLayer {
    std::size_t heads = 1;
    Linear query, key, value, output;
    LayerNorm attention_norm;
    Linear ff_in, ff_out;
    LayerNorm ff_norm;

    static TransformerEncoderLayer create(ParameterStore& store, const std::string& name, std::size_t dim,
                                          std::size_t heads, std::size_t ff_dim, Rng& rng);

    Var attention(const Var& tokens) const;
    Var operator()(const Var& tokens) const;
};

struct Mlp {
    std::vector<Linear> layers;

    static Mlp create(ParameterStore& store, const std::string& name, std::size_t in,
                      const std::vector<std::size_t>& hidden, std::size_t out, Rng& rng);
    // relu between layers, linear output.
    Var operator()(const Var& x) const;
};

}  // namespace hienet::nn
