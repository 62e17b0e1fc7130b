#include "sentord/btsort.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sentord/layout.hpp"

namespace sentord {

double GoldOracleScorer::prob_before(const ShuffledDocument& doc, size_t i, size_t j) {
    ++calls_;
    // gold_perm[r] = presented index at rank r; i precedes j iff i's rank is
    // smaller.
    size_t rank_i = 0, rank_j = 0;
    for (size_t r = 0; r < doc.gold_perm.size(); ++r) {
        if (doc.gold_perm[r] == static_cast<int>(i)) rank_i = r;
        if (doc.gold_perm[r] == static_cast<int>(j)) rank_j = r;
    }
    return rank_i < rank_j ? 1.0 : 0.0;
}

ModelPairScorer::ModelPairScorer(PairModel& model, const Vocab& vocab, size_t max_sent_tokens)
    : model_(model), vocab_(vocab), max_sent_tokens_(max_sent_tokens) {}

double ModelPairScorer::prob_before(const ShuffledDocument& doc, size_t i, size_t j) {
    ++calls_;
    const EncodedInput input =
        build_pair_input(encode(doc.presented[i], vocab_), encode(doc.presented[j], vocab_),
                         model_.config().max_seq_len, max_sent_tokens_);
    const double logit = double(model_.forward(input, nullptr));
    return 1.0 / (1.0 + std::exp(-logit));
}

PairwiseMatrix pairwise_scores(const ShuffledDocument& doc, PairScorer& scorer) {
    const size_t n = doc.n_sentences();
    if (n < 2) throw Error("btsort", "too_few_sentences", "pairwise scoring needs n >= 2");
    PairwiseMatrix matrix(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double p = scorer.prob_before(doc, i, j);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw Error("btsort", "bad_probability",
                            "scorer returned " + std::to_string(p) + " for pair (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
            }
            matrix.p[i][j] = p;
            matrix.p[j][i] = 1.0 - p;
        }
    }
    return matrix;
}

namespace {

struct Edge {
    size_t from, to;
    double strength;  // |p - 0.5|
};

// Any cycle reachable in the remaining graph, found by walking successors
// until a node repeats.
std::vector<size_t> find_cycle(const std::vector<std::vector<bool>>& edge,
                               const std::vector<bool>& alive, size_t n) {
    std::vector<int> state(n, 0);
    std::vector<size_t> stack;
    for (size_t start = 0; start < n; ++start) {
        if (!alive[start] || state[start] != 0) continue;
        stack.clear();
        size_t cur = start;
        while (true) {
            state[cur] = 1;
            stack.push_back(cur);
            size_t next = n;
            for (size_t j = 0; j < n; ++j) {
                if (alive[j] && edge[cur][j] && state[j] != 2) {
                    next = j;
                    break;
                }
            }
            if (next == n) {
                state[cur] = 2;
                stack.pop_back();
                if (stack.empty()) break;
                cur = stack.back();
                continue;
            }
            if (state[next] == 1) {
                // unwind to the cycle entry
                auto it = std::find(stack.begin(), stack.end(), next);
                return std::vector<size_t>(it, stack.end());
            }
            cur = next;
        }
    }
    return {};
}

}  // namespace

OrderPrediction topo_order(const PairwiseMatrix& matrix, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw Error("btsort", "bad_threshold", "threshold must be in (0, 1)");
    }
    const size_t n = matrix.n;
    OrderPrediction order;
    if (n == 0) return order;

    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i != j && matrix.p[i][j] > threshold) edge[i][j] = true;
        }
    }

    std::vector<bool> alive(n, true);
    size_t remaining = n;
    while (remaining > 0) {
        // Zero-in-degree candidates among the remaining nodes.
        size_t pick = n;
        double best_mass = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            bool has_incoming = false;
            for (size_t j = 0; j < n && !has_incoming; ++j) {
                if (alive[j] && edge[j][i]) has_incoming = true;
            }
            if (has_incoming) continue;
            double mass = 0.0;
            for (size_t j = 0; j < n; ++j) {
                if (alive[j] && j != i) mass += matrix.p[i][j];
            }
            if (mass > best_mass + 1e-12) {
                best_mass = mass;
                pick = i;
            }
        }
        if (pick != n) {
            order.push_back(static_cast<int>(pick));
            alive[pick] = false;
            --remaining;
            continue;
        }

        // Every remaining node has an incoming edge: break the weakest edge
        // on some cycle and retry.
        const std::vector<size_t> cycle = find_cycle(edge, alive, n);
        if (cycle.empty()) {
            throw Error("btsort", "internal", "no zero-in-degree node but no cycle found");
        }
        size_t cut_from = n, cut_to = n;
        double weakest = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < cycle.size(); ++k) {
            const size_t a = cycle[k];
            const size_t b = cycle[(k + 1) % cycle.size()];
            if (!edge[a][b]) continue;
            const double strength = std::fabs(matrix.p[a][b] - 0.5);
            if (strength < weakest - 1e-12 ||
                (std::fabs(strength - weakest) <= 1e-12 &&
                 (a < cut_from || (a == cut_from && b < cut_to)))) {
                weakest = strength;
                cut_from = a;
                cut_to = b;
            }
        }
        if (cut_from == n) {
            throw Error("btsort", "internal", "cycle without edges");
        }
        edge[cut_from][cut_to] = false;
    }
    return order;
}

}  // namespace sentord
