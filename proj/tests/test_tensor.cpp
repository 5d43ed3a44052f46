#include <doctest.h>

#include <limits>

#include "gnlab/errors.hpp"
#include "gnlab/tensor.hpp"

using namespace gnlab;

TEST_CASE("shape/data length mismatch is rejected") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), Error);
    CHECK_NOTHROW(Tensor({2, 3}, std::vector<double>(6, 0.0)));
}

TEST_CASE("2d accessors address row-major storage") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.at(0, 0) == 1);
    CHECK(t.at(0, 2) == 3);
    CHECK(t.at(1, 0) == 4);
    CHECK(t.at(1, 2) == 6);
}

TEST_CASE("bitwise_equal distinguishes -0.0 from 0.0 and matches NaN bits") {
    Tensor a = Tensor::vector({0.0});
    Tensor b = Tensor::vector({-0.0});
    CHECK(!bitwise_equal(a, b));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(bitwise_equal(Tensor::vector({nan}), Tensor::vector({nan})));
}

TEST_CASE("all_finite flags NaN and infinity") {
    CHECK(Tensor::vector({1.0, -2.5}).all_finite());
    CHECK(!Tensor::vector({1.0, std::numeric_limits<double>::infinity()}).all_finite());
    CHECK(!Tensor::vector({std::numeric_limits<double>::quiet_NaN()}).all_finite());
}

TEST_CASE("empty-shape tensor is a scalar slot") {
    Tensor t = Tensor::zeros({});
    CHECK(t.size() == 1);
}
