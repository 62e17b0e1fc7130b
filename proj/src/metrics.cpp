#include "sentord/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sentord {

namespace {

size_t merge_count(std::vector<int>& values, std::vector<int>& scratch, size_t lo, size_t hi) {
    if (hi - lo <= 1) return 0;
    const size_t mid = lo + (hi - lo) / 2;
    size_t inversions = merge_count(values, scratch, lo, mid) + merge_count(values, scratch, mid, hi);
    size_t a = lo, b = mid, out = lo;
    while (a < mid && b < hi) {
        if (values[a] <= values[b]) {
            scratch[out++] = values[a++];
        } else {
            inversions += mid - a;
            scratch[out++] = values[b++];
        }
    }
    while (a < mid) scratch[out++] = values[a++];
    while (b < hi) scratch[out++] = values[b++];
    std::copy(scratch.begin() + lo, scratch.begin() + hi, values.begin() + lo);
    return inversions;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

size_t count_inversions(std::vector<int> values) {
    std::vector<int> scratch(values.size());
    return merge_count(values, scratch, 0, values.size());
}

double kendall_tau(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (pred.size() != gold.size()) {
        throw Error("metrics", "length_mismatch", "pred and gold orders differ in length");
    }
    const size_t n = pred.size();
    if (n == 0) throw Error("metrics", "empty_order", "cannot score an empty order");
    if (n == 1) return 1.0;

    // Rank of each presented index under the gold order, read off in the
    // predicted order; discordant pairs are exactly the inversions.
    std::vector<int> gold_rank(n, -1);
    for (size_t r = 0; r < n; ++r) {
        const int p = gold[r];
        if (p < 0 || static_cast<size_t>(p) >= n || gold_rank[static_cast<size_t>(p)] != -1) {
            throw Error("metrics", "bad_permutation", "gold order is not a permutation");
        }
        gold_rank[static_cast<size_t>(p)] = static_cast<int>(r);
    }
    std::vector<int> seq(n);
    std::vector<bool> seen(n, false);
    for (size_t r = 0; r < n; ++r) {
        const int p = pred[r];
        if (p < 0 || static_cast<size_t>(p) >= n || seen[static_cast<size_t>(p)]) {
            throw Error("metrics", "bad_permutation", "pred order is not a permutation");
        }
        seen[static_cast<size_t>(p)] = true;
        seq[r] = gold_rank[static_cast<size_t>(p)];
    }
    const size_t discordant = count_inversions(std::move(seq));
    const double pairs = double(n) * double(n - 1) / 2.0;
    return 1.0 - 2.0 * double(discordant) / pairs;
}

double pmr(const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& golds) {
    if (preds.size() != golds.size() || preds.empty()) {
        throw Error("metrics", "misaligned_lists", "pred and gold lists must align and be non-empty");
    }
    size_t exact = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == golds[i]) ++exact;
    }
    return 100.0 * double(exact) / double(preds.size());
}

MetricsReport evaluate_orders(const std::vector<std::vector<int>>& preds,
                              const std::vector<std::vector<int>>& golds,
                              const std::vector<std::string>& doc_ids) {
    MetricsReport report;
    report.n_documents = preds.size();
    report.pmr = pmr(preds, golds);
    double sum = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const double tau = kendall_tau(preds[i], golds[i]);
        report.per_document_tau.push_back(tau);
        sum += tau;
    }
    report.tau_mean = sum / double(preds.size());
    report.doc_ids = doc_ids;
    return report;
}

std::string MetricsReport::to_text(bool per_document) const {
    std::ostringstream out;
    out << "{\"tau_mean\": " << format_double(tau_mean) << ", \"pmr\": " << format_double(pmr)
        << ", \"n_documents\": " << n_documents << "}\n";
    if (per_document) {
        for (size_t i = 0; i < per_document_tau.size(); ++i) {
            const std::string id = i < doc_ids.size() ? doc_ids[i] : std::to_string(i);
            out << id << "\t" << format_double(per_document_tau[i]) << "\n";
        }
    }
    return out.str();
}

}  // namespace sentord
