#include "gnlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <utility>

#include "gnlab/errors.hpp"

namespace gnlab {

size_t shape_product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) {
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    require(shape_product(shape) == data.size(), ErrorKind::invalid_argument,
            "Tensor: shape does not match data length");
}

Tensor Tensor::zeros(std::vector<size_t> shape) {
    size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<size_t> shape, double value) {
    size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::vector<double> values) {
    size_t n = values.size();
    return Tensor({n}, std::move(values));
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double v) { return std::isfinite(v); });
}

double Tensor::min_value() const {
    require(!data.empty(), ErrorKind::invalid_argument, "min_value: empty tensor");
    return *std::min_element(data.begin(), data.end());
}

double Tensor::max_value() const {
    require(!data.empty(), ErrorKind::invalid_argument, "max_value: empty tensor");
    return *std::max_element(data.begin(), data.end());
}

double Tensor::sum() const {
    return std::accumulate(data.begin(), data.end(), 0.0);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) {
        return false;
    }
    if (a.data.empty()) {
        return true;
    }
    return std::memcmp(a.data.data(), b.data.data(),
                       a.data.size() * sizeof(double)) == 0;
}

}  // namespace gnlab
