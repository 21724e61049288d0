#pragma once

#include "hienet/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hienet::nn {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the tape. Inputs are kept alive by the consuming node, so a
// graph lives exactly as long as some handle to its output.
struct Node {
    Tensor value;
    Tensor grad;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backward_fn;
    const char* op = "leaf";
    bool requires_grad = false;
    std::uint64_t visit_mark = 0;  // scratch for graph traversals

    // Zero-initialised on first use.
    Tensor& grad_buffer();
};

class Var {
public:
    Var() = default;
    explicit Var(NodePtr node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    bool requires_grad() const { return node_->requires_grad; }
    bool defined() const { return static_cast<bool>(node_); }

    // Scalar value of a 1x1 result.
    double item() const;

    const NodePtr& node() const { return node_; }

private:
    NodePtr node_;
};

Var constant(Tensor value);
Var variable(Tensor value);

// Reverse sweep from a 1x1 output. Gradients accumulate into every reachable
// node that requires them.
void backward(const Var& root);

// Name of the first operation (in evaluation order) that produced a non-finite
// value, if any.
std::optional<std::string> first_nonfinite_op(const Var& root);

// Matrix ops. Shapes are rank-2; mismatches throw ShapeError naming the op.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
// a (n x c) + b (1 x c) on every row.
Var add_row(const Var& a, const Var& b);
// a (n x c) * b (1 x c) on every row.
Var mul_row(const Var& a, const Var& b);
// a (n x c) * m (n x 1) on every column.
Var mul_col(const Var& a, const Var& m);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, std::size_t start, std::size_t len);
Var slice_rows(const Var& a, std::size_t start, std::size_t len);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var square(const Var& a);
Var softmax_rows(const Var& a);
// Per-row standardisation to mean 0 / variance 1 (no scale-shift).
Var normalize_rows(const Var& a, double eps = 1e-5);

Var mean_rows(const Var& a);  // 1 x c
Var mean_all(const Var& a);   // 1 x 1
Var sum_all(const Var& a);    // 1 x 1

// Embedding lookup: rows of table at the given indices.
Var gather_rows(const Var& table, const std::vector<std::size_t>& indices);
// 1 x c sum of weight_i * table[index_i].
Var weighted_row_sum(const Var& table, const std::vector<std::size_t>& indices,
                     const std::vector<double>& weights);

// Constant sparse matrix in coordinate form.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row;
    std::vector<std::size_t> col;
    std::vector<double> value;

    void insert(std::size_t r, std::size_t c, double v);
    static SparseMatrix from_dense(const Tensor& dense);
    Tensor to_dense() const;
};

// a (constant) x b.
Var spmm(const SparseMatrix& a, const Var& b);

// Raw dense kernels, shared with code that runs outside the tape.
void matmul_into(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace hienet::nn
