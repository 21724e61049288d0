#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hienet::nn {

// Dense row-major array of doubles. Layers work on rank-2 tensors; vectors are 1 x n.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor row(std::span<const double> values);
    static Tensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rows() const {
        if (shape_.size() == 2) return shape_[0];
        if (shape_.size() == 1) return 1;
        not_a_matrix("rows");
    }
    std::size_t cols() const {
        if (shape_.size() == 2) return shape_[1];
        if (shape_.size() == 1) return shape_[0];
        not_a_matrix("cols");
    }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<const double> row_span(std::size_t r) const { return data().subspan(r * cols(), cols()); }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    std::string shape_str() const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    [[noreturn]] void not_a_matrix(const char* what) const;

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace hienet::nn
