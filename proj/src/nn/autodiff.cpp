#include "hienet/nn/autodiff.hpp"

#include "hienet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>

namespace hienet::nn {

Tensor& Node::grad_buffer() {
    if (grad.empty()) grad = Tensor(value.shape(), 0.0);
    return grad;
}

double Var::item() const {
    if (value().size() != 1) throw ShapeError("item(): tensor of shape " + value().shape_str() + " is not a scalar");
    return value()[0];
}

namespace {

using BackwardFn = std::function<void(Node&)>;

Var make(Tensor value, std::vector<NodePtr> inputs, const char* op, BackwardFn fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = op;
    node->requires_grad = std::any_of(inputs.begin(), inputs.end(), [](const NodePtr& n) { return n->requires_grad; });
    if (node->requires_grad) {
        node->inputs = std::move(inputs);
        node->backward_fn = std::move(fn);
    }
    return Var(std::move(node));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void require_matrix(const char* op, const Tensor& a) {
    if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + a.shape_str());
}

template <typename F>
Var unary(const Var& a, const char* op, F&& f, BackwardFn fn) {
    Tensor out(a.value().shape());
    auto in = a.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
    return make(std::move(out), {a.node()}, op, std::move(fn));
}

}  // namespace

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = "constant";
    return Var(std::move(node));
}

Var variable(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = "leaf";
    node->requires_grad = true;
    return Var(std::move(node));
}

namespace {

std::vector<Node*> topo_order(const Var& root) {
    static std::atomic<std::uint64_t> generation{0};
    const std::uint64_t mark = ++generation;
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    root.node()->visit_mark = mark;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->visit_mark != mark) {
                child->visit_mark = mark;
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

}  // namespace

void backward(const Var& root) {
    if (root.value().size() != 1) throw ShapeError("backward: output must be a scalar, got " + root.value().shape_str());
    if (!root.requires_grad()) return;
    auto order = topo_order(root);
    root.node()->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

std::optional<std::string> first_nonfinite_op(const Var& root) {
    // Constants and parameters are leaves; the tape only records inputs of
    // nodes that need gradients, which is every node on the loss path.
    for (Node* n : topo_order(root)) {
        if (!n->value.all_finite()) return std::string(n->op);
    }
    return std::nullopt;
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    out = Tensor(n, m);
    auto A = a.data();
    auto B = b.data();
    auto C = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = C.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* brow = B.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

Var matmul(const Var& a, const Var& b) {
    require_matrix("matmul", a.value());
    require_matrix("matmul", b.value());
    if (a.cols() != b.rows()) shape_fail("matmul", a.value(), b.value());
    Tensor out;
    matmul_into(a.value(), b.value(), out);
    return make(std::move(out), {a.node(), b.node()}, "matmul", [](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        const std::size_t n = A.value.rows(), k = A.value.cols(), m = B.value.cols();
        auto G = self.grad.data();
        if (A.requires_grad) {
            auto gA = A.grad_buffer().data();
            auto Bv = B.value.data();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += G[i * m + j] * Bv[p * m + j];
                    gA[i * k + p] += s;
                }
        }
        if (B.requires_grad) {
            auto gB = B.grad_buffer().data();
            auto Av = A.value.data();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = Av[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) gB[p * m + j] += av * G[i * m + j];
                }
        }
    });
}

Var transpose(const Var& a) {
    require_matrix("transpose", a.value());
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out(c, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = a.value()(i, j);
    return make(std::move(out), {a.node()}, "transpose", [r, c](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g(i, j) += self.grad(j, i);
    });
}

namespace {

template <typename F>
Var binary_elementwise(const Var& a, const Var& b, const char* op, F&& f, BackwardFn fn) {
    if (!a.value().same_shape(b.value())) shape_fail(op, a.value(), b.value());
    Tensor out(a.value().shape());
    auto x = a.value().data();
    auto y = b.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], y[i]);
    return make(std::move(out), {a.node(), b.node()}, op, std::move(fn));
}

void accumulate(Node& target, std::span<const double> g, double factor = 1.0) {
    if (!target.requires_grad) return;
    auto t = target.grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) t[i] += factor * g[i];
}

}  // namespace

Var add(const Var& a, const Var& b) {
    return binary_elementwise(a, b, "add", std::plus<>(), [](Node& self) {
        accumulate(*self.inputs[0], self.grad.data());
        accumulate(*self.inputs[1], self.grad.data());
    });
}

Var sub(const Var& a, const Var& b) {
    return binary_elementwise(a, b, "sub", std::minus<>(), [](Node& self) {
        accumulate(*self.inputs[0], self.grad.data());
        accumulate(*self.inputs[1], self.grad.data(), -1.0);
    });
}

Var mul(const Var& a, const Var& b) {
    return binary_elementwise(a, b, "multiply", std::multiplies<>(), [](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        auto g = self.grad.data();
        if (A.requires_grad) {
            auto ga = A.grad_buffer().data();
            auto bv = B.value.data();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (B.requires_grad) {
            auto gb = B.grad_buffer().data();
            auto av = A.value.data();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(const Var& a, double s) {
    return unary(a, "scale", [s](double x) { return s * x; },
                 [s](Node& self) { accumulate(*self.inputs[0], self.grad.data(), s); });
}

Var add_scalar(const Var& a, double s) {
    return unary(a, "add_scalar", [s](double x) { return x + s; },
                 [](Node& self) { accumulate(*self.inputs[0], self.grad.data()); });
}

Var add_row(const Var& a, const Var& b) {
    require_matrix("add_row", a.value());
    if (b.rows() != 1 || b.cols() != a.cols()) shape_fail("add_row", a.value(), b.value());
    Tensor out = a.value();
    const std::size_t r = a.rows(), c = a.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) += b.value()[j];
    return make(std::move(out), {a.node(), b.node()}, "add_row", [r, c](Node& self) {
        accumulate(*self.inputs[0], self.grad.data());
        Node& B = *self.inputs[1];
        if (B.requires_grad) {
            auto& gb = B.grad_buffer();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gb[j] += self.grad(i, j);
        }
    });
}

Var mul_row(const Var& a, const Var& b) {
    require_matrix("mul_row", a.value());
    if (b.rows() != 1 || b.cols() != a.cols()) shape_fail("mul_row", a.value(), b.value());
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = a.value();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) *= b.value()[j];
    return make(std::move(out), {a.node(), b.node()}, "mul_row", [r, c](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        if (A.requires_grad) {
            auto& ga = A.grad_buffer();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ga(i, j) += self.grad(i, j) * B.value[j];
        }
        if (B.requires_grad) {
            auto& gb = B.grad_buffer();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gb[j] += self.grad(i, j) * A.value(i, j);
        }
    });
}

Var mul_col(const Var& a, const Var& m) {
    require_matrix("mul_col", a.value());
    if (m.cols() != 1 || m.rows() != a.rows()) shape_fail("mul_col", a.value(), m.value());
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = a.value();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) *= m.value()[i];
    return make(std::move(out), {a.node(), m.node()}, "mul_col", [r, c](Node& self) {
        Node& A = *self.inputs[0];
        Node& M = *self.inputs[1];
        if (A.requires_grad) {
            auto& ga = A.grad_buffer();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ga(i, j) += self.grad(i, j) * M.value[i];
        }
        if (M.requires_grad) {
            auto& gm = M.grad_buffer();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gm[i] += self.grad(i, j) * A.value(i, j);
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const std::size_t r = parts[0].rows();
    std::size_t c = 0;
    std::vector<NodePtr> inputs;
    for (const auto& p : parts) {
        require_matrix("concat", p.value());
        if (p.rows() != r) shape_fail("concat", parts[0].value(), p.value());
        c += p.cols();
        inputs.push_back(p.node());
    }
    Tensor out(r, c);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p.value()(i, j);
        off += p.cols();
    }
    return make(std::move(out), std::move(inputs), "concat", [r](Node& self) {
        std::size_t off = 0;
        for (auto& in : self.inputs) {
            const std::size_t c = in->value.cols();
            if (in->requires_grad) {
                auto& g = in->grad_buffer();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) g(i, j) += self.grad(i, off + j);
            }
            off += c;
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    std::vector<NodePtr> inputs;
    for (const auto& p : parts) {
        require_matrix("concat", p.value());
        if (p.cols() != c) shape_fail("concat", parts[0].value(), p.value());
        r += p.rows();
        inputs.push_back(p.node());
    }
    Tensor out(r, c);
    std::size_t off = 0;
    for (const auto& p : parts) {
        auto src = p.value().data();
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(off * c));
        off += p.rows();
    }
    return make(std::move(out), std::move(inputs), "concat", [c](Node& self) {
        std::size_t off = 0;
        for (auto& in : self.inputs) {
            const std::size_t n = in->value.size();
            if (in->requires_grad) accumulate(*in, self.grad.data().subspan(off * c, n));
            off += in->value.rows();
        }
    });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t len) {
    require_matrix("slice", a.value());
    if (start + len > a.cols())
        throw ShapeError("slice: columns [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of range for " + a.value().shape_str());
    const std::size_t r = a.rows();
    Tensor out(r, len);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < len; ++j) out(i, j) = a.value()(i, start + j);
    return make(std::move(out), {a.node()}, "slice", [r, start, len](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < len; ++j) g(i, start + j) += self.grad(i, j);
    });
}

Var slice_rows(const Var& a, std::size_t start, std::size_t len) {
    require_matrix("slice", a.value());
    if (start + len > a.rows())
        throw ShapeError("slice: rows [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of range for " + a.value().shape_str());
    const std::size_t c = a.cols();
    Tensor out(len, c);
    auto src = a.value().data().subspan(start * c, len * c);
    std::copy(src.begin(), src.end(), out.data().begin());
    return make(std::move(out), {a.node()}, "slice", [start, c](Node& self) {
        auto g = self.inputs[0]->grad_buffer().data().subspan(start * c, self.grad.size());
        auto s = self.grad.data();
        for (std::size_t i = 0; i < s.size(); ++i) g[i] += s[i];
    });
}

Var sigmoid(const Var& a) {
    return unary(a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](Node& self) {
        auto g = self.inputs[0]->grad_buffer().data();
        auto y = self.value.data();
        auto d = self.grad.data();
        for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i] * y[i] * (1.0 - y[i]);
    });
}

Var tanh(const Var& a) {
    return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](Node& self) {
        auto g = self.inputs[0]->grad_buffer().data();
        auto y = self.value.data();
        auto d = self.grad.data();
        for (std::size_t i = 0; i < d.size(); ++i) g[i] += d[i] * (1.0 - y[i] * y[i]);
    });
}

Var relu(const Var& a) {
    return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](Node& self) {
        auto g = self.inputs[0]->grad_buffer().data();
        auto x = self.inputs[0]->value.data();
        auto d = self.grad.data();
        for (std::size_t i = 0; i < d.size(); ++i)
            if (x[i] > 0.0) g[i] += d[i];
    });
}

Var square(const Var& a) {
    return unary(a, "square", [](double x) { return x * x; }, [](Node& self) {
        auto g = self.inputs[0]->grad_buffer().data();
        auto x = self.inputs[0]->value.data();
        auto d = self.grad.data();
        for (std::size_t i = 0; i < d.size(); ++i) g[i] += 2.0 * x[i] * d[i];
    });
}

Var softmax_rows(const Var& a) {
    require_matrix("softmax", a.value());
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double mx = a.value()(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, a.value()(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += out(i, j) = std::exp(a.value()(i, j) - mx);
        for (std::size_t j = 0; j < c; ++j) out(i, j) /= s;
    }
    return make(std::move(out), {a.node()}, "softmax", [r, c](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += self.grad(i, j) * self.value(i, j);
            for (std::size_t j = 0; j < c; ++j) g(i, j) += self.value(i, j) * (self.grad(i, j) - dot);
        }
    });
}

Var normalize_rows(const Var& a, double eps) {
    require_matrix("layer_norm", a.value());
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out(r, c);
    std::vector<double> inv_std(r);
    for (std::size_t i = 0; i < r; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += a.value()(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = a.value()(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) out(i, j) = (a.value()(i, j) - mean) * inv_std[i];
    }
    return make(std::move(out), {a.node()}, "layer_norm", [r, c, inv_std = std::move(inv_std)](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        const double n = static_cast<double>(c);
        for (std::size_t i = 0; i < r; ++i) {
            double sum_g = 0.0, sum_gy = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                sum_g += self.grad(i, j);
                sum_gy += self.grad(i, j) * self.value(i, j);
            }
            for (std::size_t j = 0; j < c; ++j)
                g(i, j) += inv_std[i] * (self.grad(i, j) - sum_g / n - self.value(i, j) * sum_gy / n);
        }
    });
}

Var mean_rows(const Var& a) {
    require_matrix("mean", a.value());
    const std::size_t r = a.rows(), c = a.cols();
    if (r == 0) throw ShapeError("mean: empty input");
    Tensor out(1, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j] += a.value()(i, j);
    for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(r);
    return make(std::move(out), {a.node()}, "mean", [r, c](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        const double inv = 1.0 / static_cast<double>(r);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g(i, j) += self.grad[j] * inv;
    });
}

Var sum_all(const Var& a) {
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    return make(Tensor(1, 1, s), {a.node()}, "sum", [](Node& self) {
        auto g = self.inputs[0]->grad_buffer().data();
        for (double& v : g) v += self.grad[0];
    });
}

Var mean_all(const Var& a) {
    if (a.value().empty()) throw ShapeError("mean: empty input");
    return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var gather_rows(const Var& table, const std::vector<std::size_t>& indices) {
    require_matrix("embedding", table.value());
    const std::size_t c = table.cols();
    Tensor out(indices.size(), c);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= table.rows())
            throw ShapeError("embedding: index " + std::to_string(indices[i]) + " out of range for " +
                             table.value().shape_str());
        auto src = table.value().row_span(indices[i]);
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    return make(std::move(out), {table.node()}, "embedding", [indices, c](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < indices.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) g(indices[i], j) += self.grad(i, j);
    });
}

Var weighted_row_sum(const Var& table, const std::vector<std::size_t>& indices, const std::vector<double>& weights) {
    require_matrix("weighted_row_sum", table.value());
    if (indices.size() != weights.size()) throw ShapeError("weighted_row_sum: index/weight length mismatch");
    const std::size_t c = table.cols();
    Tensor out(1, c);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= table.rows())
            throw ShapeError("weighted_row_sum: index " + std::to_string(indices[i]) + " out of range for " +
                             table.value().shape_str());
        for (std::size_t j = 0; j < c; ++j) out[j] += weights[i] * table.value()(indices[i], j);
    }
    return make(std::move(out), {table.node()}, "weighted_row_sum", [indices, weights, c](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < indices.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) g(indices[i], j) += weights[i] * self.grad[j];
    });
}

void SparseMatrix::insert(std::size_t r, std::size_t c, double v) {
    row.push_back(r);
    col.push_back(c);
    value.push_back(v);
}

SparseMatrix SparseMatrix::from_dense(const Tensor& dense) {
    SparseMatrix s;
    s.rows = dense.rows();
    s.cols = dense.cols();
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t j = 0; j < s.cols; ++j)
            if (dense(i, j) != 0.0) s.insert(i, j, dense(i, j));
    return s;
}

Tensor SparseMatrix::to_dense() const {
    Tensor t(rows, cols);
    for (std::size_t k = 0; k < value.size(); ++k) t(row[k], col[k]) += value[k];
    return t;
}

Var spmm(const SparseMatrix& a, const Var& b) {
    require_matrix("spmm", b.value());
    if (a.cols != b.rows())
        throw ShapeError("spmm: incompatible shapes " + shape_str({a.rows, a.cols}) + " and " + b.value().shape_str());
    const std::size_t m = b.cols();
    Tensor out(a.rows, m);
    for (std::size_t k = 0; k < a.value.size(); ++k) {
        const double v = a.value[k];
        const double* src = b.value().data().data() + a.col[k] * m;
        double* dst = out.data().data() + a.row[k] * m;
        for (std::size_t j = 0; j < m; ++j) dst[j] += v * src[j];
    }
    return make(std::move(out), {b.node()}, "spmm", [a, m](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t k = 0; k < a.value.size(); ++k) {
            const double v = a.value[k];
            const double* src = self.grad.data().data() + a.row[k] * m;
            double* dst = g.data().data() + a.col[k] * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] += v * src[j];
        }
    });
}

}  // namespace hienet::nn
