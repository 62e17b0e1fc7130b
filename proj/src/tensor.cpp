#include "sentord/tensor.hpp"

#include <cmath>

#include "sentord/common.hpp"

namespace sentord {

void add_inplace(Tensor2D& y, const Tensor2D& x) {
    if (!y.same_shape(x)) throw Error("nn", "shape_mismatch", "add_inplace shapes differ");
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols != b.rows) throw Error("nn", "shape_mismatch", "matmul inner dims differ");
    Tensor2D c(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        const real* ai = a.row(i);
        real* ci = c.row(i);
        for (size_t k = 0; k < a.cols; ++k) {
            const real aik = ai[k];
            if (aik == real(0)) continue;
            const real* bk = b.row(k);
            for (size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Tensor2D matmul_at_b(const Tensor2D& a, const Tensor2D& b) {
    if (a.rows != b.rows) throw Error("nn", "shape_mismatch", "matmul_at_b outer dims differ");
    Tensor2D c(a.cols, b.cols);
    for (size_t k = 0; k < a.rows; ++k) {
        const real* ak = a.row(k);
        const real* bk = b.row(k);
        for (size_t i = 0; i < a.cols; ++i) {
            const real aki = ak[i];
            if (aki == real(0)) continue;
            real* ci = c.row(i);
            for (size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Tensor2D matmul_a_bt(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols != b.cols) throw Error("nn", "shape_mismatch", "matmul_a_bt inner dims differ");
    Tensor2D c(a.rows, b.rows);
    for (size_t i = 0; i < a.rows; ++i) {
        const real* ai = a.row(i);
        real* ci = c.row(i);
        for (size_t j = 0; j < b.rows; ++j) {
            const real* bj = b.row(j);
            double acc = 0.0;
            for (size_t k = 0; k < a.cols; ++k) acc += double(ai[k]) * double(bj[k]);
            ci[j] = real(acc);
        }
    }
    return c;
}

bool all_finite(const Tensor2D& t) {
    for (real v : t.data) {
        if (!std::isfinite(double(v))) return false;
    }
    return true;
}

}  // namespace sentord
