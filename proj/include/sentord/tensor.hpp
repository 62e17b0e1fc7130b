#pragma once

#include <cstddef>
#include <vector>

#include "sentord/common.hpp"

namespace sentord {

// Dense row-major matrix. Vectors are 1xN or Nx1 as convenient.
struct Tensor2D {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<real> data;

    Tensor2D() = default;
    Tensor2D(size_t r, size_t c) : rows(r), cols(c), data(r * c, real(0)) {}

    real* row(size_t i) { return data.data() + i * cols; }
    const real* row(size_t i) const { return data.data() + i * cols; }

    real& at(size_t i, size_t j) { return data[i * cols + j]; }
    real at(size_t i, size_t j) const { return data[i * cols + j]; }

    size_t size() const { return data.size(); }

    void zero() { std::fill(data.begin(), data.end(), real(0)); }

    bool same_shape(const Tensor2D& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

// Y += X (shapes must match).
void add_inplace(Tensor2D& y, const Tensor2D& x);

// C = A * B, A is (m x k), B is (k x n).
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);

// C = A^T * B, A is (k x m), B is (k x n) -> (m x n).
Tensor2D matmul_at_b(const Tensor2D& a, const Tensor2D& b);

// C = A * B^T, A is (m x k), B is (n x k) -> (m x n).
Tensor2D matmul_a_bt(const Tensor2D& a, const Tensor2D& b);

bool all_finite(const Tensor2D& t);

}  // namespace sentord
