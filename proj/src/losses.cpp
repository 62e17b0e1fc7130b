#include "sentord/losses.hpp"

#include <algorithm>
#include <cmath>

namespace sentord {

namespace {

void check_args(const std::vector<real>& z, const std::vector<int>& gold_perm) {
    if (z.size() != gold_perm.size()) {
        throw Error("losses", "length_mismatch", "scores and gold permutation differ in length");
    }
    std::vector<bool> seen(z.size(), false);
    for (int p : gold_perm) {
        if (p < 0 || static_cast<size_t>(p) >= z.size() || seen[static_cast<size_t>(p)]) {
            throw Error("losses", "bad_permutation", "gold_perm is not a permutation");
        }
        seen[static_cast<size_t>(p)] = true;
    }
}

// Log-sum-exp over ranks j..n-1 of the rank-ordered scores, suffix-scanned
// so every tail shares one stable pass.
std::vector<double> suffix_lse(const std::vector<double>& ranked) {
    const size_t n = ranked.size();
    std::vector<double> lse(n);
    lse[n - 1] = ranked[n - 1];
    for (size_t j = n - 1; j-- > 0;) {
        const double a = ranked[j];
        const double b = lse[j + 1];
        const double m = std::max(a, b);
        lse[j] = m + std::log(std::exp(a - m) + std::exp(b - m));
    }
    return lse;
}

}  // namespace

LossOutput list_mle(const std::vector<real>& z, const std::vector<int>& gold_perm) {
    check_args(z, gold_perm);
    const size_t n = z.size();

    std::vector<double> ranked(n);
    for (size_t r = 0; r < n; ++r) ranked[r] = double(z[static_cast<size_t>(gold_perm[r])]);
    const std::vector<double> lse = suffix_lse(ranked);

    double value = 0.0;
    std::vector<double> grad_ranked(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        value += lse[j] - ranked[j];
        grad_ranked[j] -= 1.0;
        for (size_t m = j; m < n; ++m) {
            grad_ranked[m] += std::exp(ranked[m] - lse[j]);
        }
    }

    LossOutput out;
    out.value = real(value);
    out.grad.assign(n, real(0));
    for (size_t r = 0; r < n; ++r) out.grad[static_cast<size_t>(gold_perm[r])] = real(grad_ranked[r]);
    return out;
}

LossOutput margin_list_mle(const std::vector<real>& z, const std::vector<int>& gold_perm,
                           const LossConfig& config) {
    check_args(z, gold_perm);
    const size_t n = z.size();
    if (n < 2) {
        throw Error("losses", "empty_loss", "margin ListMLE is undefined for n < 2");
    }
    if (config.gamma <= 0.0 || config.gamma > 1.0) {
        throw Error("losses", "bad_gamma", "gamma must be in (0, 1]");
    }

    std::vector<double> ranked(n);
    for (size_t r = 0; r < n; ++r) ranked[r] = double(z[static_cast<size_t>(gold_perm[r])]);
    const std::vector<double> lse = suffix_lse(ranked);

    // Inner sum upper rank: n-2 (0-based) as printed, n-1 with the switch.
    const size_t k_end = config.margin_sum_includes_last ? n : n - 1;

    double value = 0.0;
    std::vector<double> grad_ranked(n, 0.0);
    for (size_t j = 0; j + 1 < n; ++j) {
        const double w = 1.0 / double(n - 1 - j);
        auto F = [&](size_t k) { return std::exp(ranked[k] - lse[j]); };

        // -w * log F_j(j)
        value += -w * (ranked[j] - lse[j]);
        grad_ranked[j] += -w;
        for (size_t m = j; m < n; ++m) grad_ranked[m] += w * F(m);

        // -w * sum_k log(gamma - F_j(k))
        for (size_t k = j + 1; k < k_end; ++k) {
            const double arg = config.gamma - F(k);
            if (arg < config.epsilon) {
                value += -w * std::log(config.epsilon);
                continue;  // clamped: zero gradient through this term
            }
            value += -w * std::log(arg);
            const double c = w * F(k) / arg;
            // d log(gamma - F_j(k))/dz_m = -F_j(k)(delta_km - F_j(m)) / (gamma - F_j(k))
            grad_ranked[k] += c;
            for (size_t m = j; m < n; ++m) grad_ranked[m] -= c * F(m);
        }
    }

    LossOutput out;
    out.value = real(value);
    out.grad.assign(n, real(0));
    for (size_t r = 0; r < n; ++r) out.grad[static_cast<size_t>(gold_perm[r])] = real(grad_ranked[r]);
    return out;
}

LossOutput compute_loss(const std::vector<real>& z, const std::vector<int>& gold_perm,
                        const LossConfig& config) {
    if (config.variant == LossVariant::list_mle) return list_mle(z, gold_perm);
    return margin_list_mle(z, gold_perm, config);
}

}  // namespace sentord
