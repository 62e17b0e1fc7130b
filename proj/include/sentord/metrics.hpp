#pragma once

#include <string>
#include <vector>

#include "sentord/common.hpp"

namespace sentord {

struct MetricsReport {
    double tau_mean = 0.0;
    double pmr = 0.0;  // percentage in [0, 100]
    size_t n_documents = 0;
    std::vector<double> per_document_tau;
    std::vector<std::string> doc_ids;

    // One JSON summary line, fixed precision so repeated runs are
    // byte-identical; per-document lines appended when requested.
    std::string to_text(bool per_document = false) const;
};

// Inversions via merge sort, O(n log n).
size_t count_inversions(std::vector<int> values);

// tau = 1 - 2 * discordant / C(n,2); n = 1 scores 1 by convention.
double kendall_tau(const std::vector<int>& pred, const std::vector<int>& gold);

// 100 * exact-match fraction.
double pmr(const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& golds);

MetricsReport evaluate_orders(const std::vector<std::vector<int>>& preds,
                              const std::vector<std::vector<int>>& golds,
                              const std::vector<std::string>& doc_ids = {});

}  // namespace sentord
