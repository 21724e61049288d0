#include "hienet/nn/tensor.hpp"

#include "hienet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace hienet::nn {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    const std::size_t n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
    data_.assign(n, fill);
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill) : Tensor(std::vector<std::size_t>{rows, cols}, fill) {}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Tensor t(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("from_rows: ragged rows");
        for (double v : row) t.data_[i++] = v;
    }
    return t;
}

Tensor Tensor::row(std::span<const double> values) {
    Tensor t(1, values.size());
    std::copy(values.begin(), values.end(), t.data_.begin());
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

void Tensor::not_a_matrix(const char* what) const {
    throw ShapeError(std::string(what) + "(): tensor of shape " + shape_str() + " is not a matrix");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_str() const { return nn::shape_str(shape_); }

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace hienet::nn
