#pragma once

#include <cstddef>
#include <vector>

namespace gnlab {

// Dense n-dimensional array of doubles, row-major. The one numeric carrier
// used for inputs, weights, masks and attributions alike.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<size_t> shape_in, std::vector<double> data_in);

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double value);
    static Tensor vector(std::vector<double> values);

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    // 2d accessors for weight matrices (shape [rows, cols]).
    size_t rows() const { return shape.at(0); }
    size_t cols() const { return shape.at(1); }
    double& at(size_t r, size_t c) { return data[r * shape[1] + c]; }
    double at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    double min_value() const;
    double max_value() const;
    double sum() const;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);
size_t shape_product(const std::vector<size_t>& shape);

}  // namespace gnlab
