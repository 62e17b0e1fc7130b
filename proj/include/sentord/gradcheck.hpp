#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sentord/common.hpp"

namespace sentord {

// Central finite differences vs analytic gradients. The f32 build checks
// with h=1e-3 against 1e-3; the f64 build tightens to h=1e-5 against 1e-6.
#ifdef SENTORD_SCALAR_64
constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-6;
// FD noise is ~eps/h absolute, so errors are measured relative to
// max(floor, |analytic|, |fd|).
constexpr double kFdFloor = 1e-3;
#else
constexpr double kFdStep = 1e-3;
constexpr double kFdTolerance = 1e-3;
constexpr double kFdFloor = 1.0;
#endif

struct GradCheckReport {
    double max_rel_err = 0.0;
    size_t n_coords = 0;
    size_t n_cases = 0;
    std::string worst_case;

    void absorb(double rel_err, const std::string& label);
    void merge(const GradCheckReport& other);
    bool ok() const { return max_rel_err < kFdTolerance; }
};

double fd_rel_err(double analytic, double fd);

// Compares analytic[i] against the central difference of eval() when
// values[i] is perturbed by +-h.
GradCheckReport check_coords(const std::function<double()>& eval, real* values,
                             const real* analytic, size_t count, const std::string& label);

GradCheckReport gradcheck_softmax(uint64_t seed, int cases);
GradCheckReport gradcheck_affine(uint64_t seed, int cases);
GradCheckReport gradcheck_layernorm(uint64_t seed, int cases);
GradCheckReport gradcheck_gelu(uint64_t seed, int cases);
GradCheckReport gradcheck_attention(uint64_t seed, int cases);
GradCheckReport gradcheck_transformer_layer(uint64_t seed, int cases);
GradCheckReport gradcheck_list_mle(uint64_t seed, int cases);
GradCheckReport gradcheck_margin_list_mle(uint64_t seed, int cases);
GradCheckReport gradcheck_full_model(uint64_t seed, int cases);

// Runs every suite, printing one line each to `out`; returns the merged
// worst case.
GradCheckReport gradcheck_all(uint64_t seed, int cases, std::ostream& out);

}  // namespace sentord
