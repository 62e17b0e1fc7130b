#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sentord/corpus.hpp"
#include "sentord/losses.hpp"
#include "sentord/metrics.hpp"
#include "sentord/model.hpp"
#include "sentord/tokenizer.hpp"

namespace sentord {

struct TrainConfig {
    size_t epochs = 5;
    size_t batch_size = 32;
    double lr_encoder = 5e-5;   // embeddings + sentence/document encoders
    double lr_decoder = 5e-3;   // decoder MLPs
    double warmup_frac = 0.2;
    double weight_decay = 0.01;
    double clip_norm = 1.0;
    uint64_t seed = 42;
    size_t max_sent_tokens = 24;
    LossConfig loss;
    ModelConfig model;
    std::vector<std::string> train_paths;
    std::string valid_path;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json_file(const std::string& path);
};

struct StepRecord {
    size_t step = 0;
    size_t epoch = 0;
    double loss = 0.0;
    double lr_encoder = 0.0;
    double lr_decoder = 0.0;
};

struct EpochRecord {
    size_t epoch = 0;
    double val_tau = 0.0;
    double val_pmr = 0.0;
    double selection = 0.0;  // tau + pmr/100
};

struct TrainHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    size_t best_epoch = 0;
    double best_selection = 0.0;

    // Line-delimited records for plotting; byte-stable across identical runs.
    std::string to_jsonl() const;
    void write(const std::string& path) const;
};

// Linear ramp 0 -> base over the first warmup_frac*total_steps steps, then
// linear decay base -> 0 at total_steps.
double lr_at(size_t step, size_t total_steps, double warmup_frac, double base);

// Decoupled-weight-decay Adam with per-group learning rates. Biases and
// layer-norm parameters are excluded from decay via Param::decay.
class AdamW {
public:
    explicit AdamW(std::vector<Param*> params, double weight_decay = 0.01, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8);
    void step(double lr_encoder, double lr_decoder);

private:
    std::vector<Param*> params_;
    std::vector<Tensor2D> m_, v_;
    double weight_decay_, beta1_, beta2_, eps_;
    size_t t_ = 0;
};

struct TrainResult {
    std::unique_ptr<OrderingModel> model;  // best-selection parameters
    TrainHistory history;
};

// Per epoch: reshuffle document order and every document's sentence order
// (seeds derived from config.seed), batch, forward, listwise loss, backward,
// clip, AdamW update under the warmup/decay schedule; evaluate on the
// validation corpus and keep the checkpoint maximizing tau + PMR/100.
// Multiple train corpora are concatenated before shuffling.
TrainResult train(const TrainConfig& config, const std::vector<Corpus>& train_corpora,
                  const Corpus& valid, const Vocab& vocab);

// Scores every document after shuffling it under the seeded generator
// (documents are never evaluated in gold order), dropout disabled.
MetricsReport evaluate(OrderingModel& model, const Vocab& vocab, const Corpus& corpus,
                       uint64_t shuffle_seed, size_t max_sent_tokens);

// Pairwise baseline training: binary cross-entropy over ordered sentence
// pairs; selection by tau + PMR/100 of the topological sort on validation.
struct PairTrainResult {
    std::unique_ptr<PairModel> model;
    TrainHistory history;
};

PairTrainResult train_pair_model(const TrainConfig& config,
                                 const std::vector<Corpus>& train_corpora, const Corpus& valid,
                                 const Vocab& vocab);

// Pairwise scoring + topological sort over a shuffled corpus.
MetricsReport evaluate_pair_model(PairModel& model, const Vocab& vocab, const Corpus& corpus,
                                  uint64_t shuffle_seed, size_t max_sent_tokens);

}  // namespace sentord
