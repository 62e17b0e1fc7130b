#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sentord/layout.hpp"
#include "sentord/nn.hpp"

namespace sentord {

struct ModelConfig {
    size_t vocab_size = 0;
    size_t d_model = 64;
    size_t n_heads = 4;
    size_t d_ff = 256;
    size_t n_sent_layers = 2;
    size_t n_doc_layers = 2;       // best validation depth per the trainer defaults
    size_t decoder_hidden = 200;
    size_t max_seq_len = 128;
    size_t max_sentences = 16;
    double dropout = 0.1;

    void validate() const;
};

struct ScoreVector {
    std::vector<real> scores;  // one per presented sentence
};

using OrderPrediction = std::vector<int>;  // rank -> presented index

// Stable descending sort of the scores; ties go to the smaller presented
// index.
OrderPrediction predict_order(const ScoreVector& z);

// Shared embedding front end: token + segment + position lookups, summed.
class Embeddings {
public:
    Embeddings() = default;
    Embeddings(const ModelConfig& config, int group);

    void init(Rng& rng, double sigma = 0.02);
    Tensor2D forward(const EncodedInput& input);
    void backward(const Tensor2D& dx);
    void collect(std::vector<Param*>& out);

    Param token, segment, position;

private:
    EncodedInput cached_input_;
    bool has_forward_ = false;
};

class EncoderStack {
public:
    EncoderStack() = default;
    EncoderStack(const std::string& name, size_t n_layers, size_t d_model, size_t n_heads,
                 size_t d_ff, int group);

    void init(Rng& rng, double sigma = 0.02);
    Tensor2D forward(const Tensor2D& x, const std::vector<bool>& mask, double dropout_p,
                     Rng* dropout_rng);
    Tensor2D backward(const Tensor2D& dy);
    void collect(std::vector<Param*>& out);

    std::vector<TransformerLayer> layers;
    LayerNorm final_norm;
};

// The full scoring network: embed the concatenated multi-[CLS] sequence,
// run the token-level sentence encoder, gather the [CLS] states, run the
// sentence-level document encoder, then a two-layer MLP head to one score
// per sentence.
class OrderingModel {
public:
    explicit OrderingModel(const ModelConfig& config);

    void init(uint64_t seed);

    // dropout_rng null disables dropout (evaluation mode).
    ScoreVector forward(const EncodedInput& input, Rng* dropout_rng = nullptr);
    void backward(const std::vector<real>& dz);

    void zero_grad();
    const std::vector<Param*>& params() const { return params_; }
    const ModelConfig& config() const { return config_; }

    ScoreVector score_document(const EncodedInput& input) { return forward(input, nullptr); }

    Embeddings embeddings;
    EncoderStack sentence_encoder;
    EncoderStack document_encoder;
    Affine decoder_hidden;
    Affine decoder_out;

private:
    ModelConfig config_;
    std::vector<Param*> params_;
    Gelu decoder_gelu_;
    Dropout embed_dropout_;
    std::vector<int> cached_cls_slots_;
    size_t cached_seq_len_ = 0;
    std::vector<bool> cached_sentence_mask_;
    bool has_forward_ = false;
};

// Pairwise relative-order model for the topological-sort baseline: same
// embedding + sentence-encoder core over a two-sentence input, a two-layer
// head on the single [CLS], one logit out.
class PairModel {
public:
    explicit PairModel(const ModelConfig& config);

    void init(uint64_t seed);
    real forward(const EncodedInput& input, Rng* dropout_rng = nullptr);
    void backward(real dlogit);

    void zero_grad();
    const std::vector<Param*>& params() const { return params_; }
    const ModelConfig& config() const { return config_; }

    Embeddings embeddings;
    EncoderStack encoder;
    Affine head_hidden;
    Affine head_out;

private:
    ModelConfig config_;
    std::vector<Param*> params_;
    Gelu head_gelu_;
    Dropout embed_dropout_;
    size_t cached_seq_len_ = 0;
    bool has_forward_ = false;
};

// Versioned binary checkpoint: magic, format version, model kind, config,
// then per-parameter records (name, shape, f32 little-endian data).
// Loading validates every shape against the stored config.
void save_checkpoint(const OrderingModel& model, const std::string& path);
void save_checkpoint(const PairModel& model, const std::string& path);
std::unique_ptr<OrderingModel> load_ordering_checkpoint(const std::string& path);
std::unique_ptr<PairModel> load_pair_checkpoint(const std::string& path);

}  // namespace sentord
