#pragma once

#include <vector>

#include "sentord/common.hpp"

namespace sentord {

enum class LossVariant { list_mle, margin_list_mle };

struct LossConfig {
    LossVariant variant = LossVariant::margin_list_mle;
    double gamma = 1.0;       // margin hyperparameter, in (0, 1]
    double epsilon = 1e-8;    // clamp floor for log(gamma - F)
    // The printed inner sum stops one short of the last rank; this switch
    // exists to test the alternative that includes it.
    bool margin_sum_includes_last = false;
};

struct LossOutput {
    real value = real(0);
    std::vector<real> grad;  // dL/dz, indexed by presented sentence index
};

// Negative log-likelihood of the gold permutation under sequential softmax
// over the remaining sentences. gold_perm[r] is the presented index of the
// rank-r sentence.
LossOutput list_mle(const std::vector<real>& z, const std::vector<int>& gold_perm);

// Margin variant: each rank j contributes log F_j(j) plus log(gamma - F_j(k))
// terms over later competitors, weighted 1/(n-j). Clamped log arguments
// contribute log(epsilon) with zero gradient. Requires n >= 2.
LossOutput margin_list_mle(const std::vector<real>& z, const std::vector<int>& gold_perm,
                           const LossConfig& config);

LossOutput compute_loss(const std::vector<real>& z, const std::vector<int>& gold_perm,
                        const LossConfig& config);

}  // namespace sentord
