#pragma once

#include <functional>
#include <vector>

#include "sentord/corpus.hpp"
#include "sentord/model.hpp"
#include "sentord/tokenizer.hpp"

namespace sentord {

// p[i][j] = probability that presented sentence i precedes presented
// sentence j in the gold order; p[i][j] + p[j][i] = 1.
struct PairwiseMatrix {
    size_t n = 0;
    std::vector<std::vector<double>> p;

    explicit PairwiseMatrix(size_t n_in)
        : n(n_in), p(n_in, std::vector<double>(n_in, 0.5)) {}
};

// Scores one ordered pair of presented sentences.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual double prob_before(const ShuffledDocument& doc, size_t i, size_t j) = 0;
    size_t calls() const { return calls_; }

protected:
    size_t calls_ = 0;
};

// Reads the gold permutation; used by the soundness harness.
class GoldOracleScorer : public PairScorer {
public:
    double prob_before(const ShuffledDocument& doc, size_t i, size_t j) override;
};

// Wraps a trained PairModel over the two-sentence layout.
class ModelPairScorer : public PairScorer {
public:
    ModelPairScorer(PairModel& model, const Vocab& vocab, size_t max_sent_tokens);
    double prob_before(const ShuffledDocument& doc, size_t i, size_t j) override;

private:
    PairModel& model_;
    const Vocab& vocab_;
    size_t max_sent_tokens_;
};

// One scorer call per unordered pair; the complement fills the other half.
PairwiseMatrix pairwise_scores(const ShuffledDocument& doc, PairScorer& scorer);

// Kahn's algorithm over the precedence graph (edge i->j iff p[i][j] >
// threshold). Among zero-in-degree candidates the node with the greatest
// outgoing probability mass wins, then the smallest index. When no node has
// zero in-degree, the weakest edge (min |p - 0.5|, ties by smallest (i,j))
// on a cycle is removed and the sort retried.
OrderPrediction topo_order(const PairwiseMatrix& matrix, double threshold = 0.5);

}  // namespace sentord
