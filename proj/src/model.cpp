#include "sentord/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "sentord/tokenizer.hpp"

namespace sentord {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kFormatVersion = 1;
constexpr uint32_t kKindOrdering = 0;
constexpr uint32_t kKindPair = 1;

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error("model", "truncated_checkpoint", "unexpected end of file");
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

float read_f32(std::istream& in) {
    const uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_config(std::ostream& out, const ModelConfig& c) {
    write_u32(out, static_cast<uint32_t>(c.vocab_size));
    write_u32(out, static_cast<uint32_t>(c.d_model));
    write_u32(out, static_cast<uint32_t>(c.n_heads));
    write_u32(out, static_cast<uint32_t>(c.d_ff));
    write_u32(out, static_cast<uint32_t>(c.n_sent_layers));
    write_u32(out, static_cast<uint32_t>(c.n_doc_layers));
    write_u32(out, static_cast<uint32_t>(c.decoder_hidden));
    write_u32(out, static_cast<uint32_t>(c.max_seq_len));
    write_u32(out, static_cast<uint32_t>(c.max_sentences));
    write_f32(out, static_cast<float>(c.dropout));
}

ModelConfig read_config(std::istream& in) {
    ModelConfig c;
    c.vocab_size = read_u32(in);
    c.d_model = read_u32(in);
    c.n_heads = read_u32(in);
    c.d_ff = read_u32(in);
    c.n_sent_layers = read_u32(in);
    c.n_doc_layers = read_u32(in);
    c.decoder_hidden = read_u32(in);
    c.max_seq_len = read_u32(in);
    c.max_sentences = read_u32(in);
    c.dropout = read_f32(in);
    return c;
}

void write_params(std::ostream& out, const std::vector<Param*>& params) {
    write_u32(out, static_cast<uint32_t>(params.size()));
    for (const Param* p : params) {
        write_u32(out, static_cast<uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_u32(out, static_cast<uint32_t>(p->w.rows));
        write_u32(out, static_cast<uint32_t>(p->w.cols));
        for (real v : p->w.data) write_f32(out, static_cast<float>(v));
    }
}

void read_params(std::istream& in, const std::vector<Param*>& params) {
    const uint32_t count = read_u32(in);
    if (count != params.size()) {
        throw Error("model", "checkpoint_mismatch",
                    "parameter count " + std::to_string(count) + " does not match model (" +
                        std::to_string(params.size()) + ")");
    }
    for (Param* p : params) {
        const uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in || name != p->name) {
            throw Error("model", "checkpoint_mismatch", "expected parameter " + p->name);
        }
        const uint32_t rows = read_u32(in);
        const uint32_t cols = read_u32(in);
        if (rows != p->w.rows || cols != p->w.cols) {
            throw Error("model", "checkpoint_mismatch",
                        "shape of " + p->name + " is " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", model expects " + std::to_string(p->w.rows) +
                            "x" + std::to_string(p->w.cols));
        }
        for (real& v : p->w.data) v = real(read_f32(in));
    }
}

uint32_t open_checkpoint(std::ifstream& in, const std::string& path) {
    if (!in) throw Error("model", "missing_file", "cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw Error("model", "bad_checkpoint", "bad magic in " + path);
    }
    const uint32_t version = read_u32(in);
    if (version != kFormatVersion) {
        throw Error("model", "bad_checkpoint", "unsupported format version " + std::to_string(version));
    }
    return read_u32(in);  // model kind
}

}  // namespace

void ModelConfig::validate() const {
    if (vocab_size < kNumReserved) throw Error("model", "bad_config", "vocab_size too small");
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw Error("model", "bad_config", "d_model must be a positive multiple of n_heads");
    }
    if (n_doc_layers < 1) throw Error("model", "bad_config", "need at least one document-encoder layer");
    if (decoder_hidden < 1) throw Error("model", "bad_config", "decoder_hidden must be >= 1");
    if (max_seq_len < 3) throw Error("model", "bad_config", "max_seq_len must be >= 3");
    if (max_sentences < 1) throw Error("model", "bad_config", "max_sentences must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw Error("model", "bad_config", "dropout must be in [0, 1)");
}

OrderPrediction predict_order(const ScoreVector& z) {
    for (real v : z.scores) {
        if (!std::isfinite(double(v))) throw Error("model", "non_finite_scores", "cannot sort");
    }
    OrderPrediction ranking(z.scores.size());
    std::iota(ranking.begin(), ranking.end(), 0);
    std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
        return z.scores[static_cast<size_t>(a)] > z.scores[static_cast<size_t>(b)];
    });
    return ranking;
}

// ---------------------------------------------------------------------------
// Embeddings

Embeddings::Embeddings(const ModelConfig& config, int group)
    : token("embeddings.token", config.vocab_size, config.d_model, true, group),
      segment("embeddings.segment", 2, config.d_model, true, group),
      position("embeddings.position", config.max_seq_len, config.d_model, true, group) {}

void Embeddings::init(Rng& rng, double sigma) {
    for (real& v : token.w.data) v = real(rng.truncated_normal(sigma));
    for (real& v : segment.w.data) v = real(rng.truncated_normal(sigma));
    for (real& v : position.w.data) v = real(rng.truncated_normal(sigma));
}

Tensor2D Embeddings::forward(const EncodedInput& input) {
    const size_t L = input.length();
    const size_t d = token.w.cols;
    Tensor2D x(L, d);
    for (size_t t = 0; t < L; ++t) {
        const int tok = input.token_ids[t];
        const int seg = input.segment_ids[t];
        const int pos = input.position_ids[t];
        if (tok < 0 || static_cast<size_t>(tok) >= token.w.rows) {
            throw Error("model", "id_out_of_range", "token id " + std::to_string(tok));
        }
        if (seg != kSegmentA && seg != kSegmentB) {
            throw Error("model", "id_out_of_range", "segment id " + std::to_string(seg));
        }
        if (pos < 0 || static_cast<size_t>(pos) >= position.w.rows) {
            throw Error("model", "id_out_of_range", "position id " + std::to_string(pos));
        }
        const real* te = token.w.row(static_cast<size_t>(tok));
        const real* se = segment.w.row(static_cast<size_t>(seg));
        const real* pe = position.w.row(static_cast<size_t>(pos));
        real* xt = x.row(t);
        for (size_t j = 0; j < d; ++j) xt[j] = te[j] + se[j] + pe[j];
    }
    cached_input_ = input;
    has_forward_ = true;
    return x;
}

void Embeddings::backward(const Tensor2D& dx) {
    if (!has_forward_) throw Error("nn", "backward_before_forward", "Embeddings");
    has_forward_ = false;
    const size_t d = token.w.cols;
    for (size_t t = 0; t < dx.rows; ++t) {
        const real* g = dx.row(t);
        real* tg = token.g.row(static_cast<size_t>(cached_input_.token_ids[t]));
        real* sg = segment.g.row(static_cast<size_t>(cached_input_.segment_ids[t]));
        real* pg = position.g.row(static_cast<size_t>(cached_input_.position_ids[t]));
        for (size_t j = 0; j < d; ++j) {
            tg[j] += g[j];
            sg[j] += g[j];
            pg[j] += g[j];
        }
    }
}

void Embeddings::collect(std::vector<Param*>& out) {
    out.push_back(&token);
    out.push_back(&segment);
    out.push_back(&position);
}

// ---------------------------------------------------------------------------
// EncoderStack

EncoderStack::EncoderStack(const std::string& name, size_t n_layers, size_t d_model,
                           size_t n_heads, size_t d_ff, int group)
    : final_norm(name + ".final_norm", d_model, group) {
    for (size_t i = 0; i < n_layers; ++i) {
        layers.emplace_back(name + ".layer" + std::to_string(i), d_model, n_heads, d_ff, group);
    }
}

void EncoderStack::init(Rng& rng, double sigma) {
    for (auto& layer : layers) layer.init(rng, sigma);
}

Tensor2D EncoderStack::forward(const Tensor2D& x, const std::vector<bool>& mask, double dropout_p,
                               Rng* dropout_rng) {
    Tensor2D h = x;
    for (auto& layer : layers) h = layer.forward(h, mask, dropout_p, dropout_rng);
    return final_norm.forward(h);
}

Tensor2D EncoderStack::backward(const Tensor2D& dy) {
    Tensor2D dh = final_norm.backward(dy);
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) dh = it->backward(dh);
    return dh;
}

void EncoderStack::collect(std::vector<Param*>& out) {
    for (auto& layer : layers) layer.collect(out);
    final_norm.collect(out);
}

// ---------------------------------------------------------------------------
// OrderingModel

OrderingModel::OrderingModel(const ModelConfig& config)
    : embeddings(config, kGroupEncoder),
      sentence_encoder("sentence_encoder", config.n_sent_layers, config.d_model, config.n_heads,
                       config.d_ff, kGroupEncoder),
      document_encoder("document_encoder", config.n_doc_layers, config.d_model, config.n_heads,
                       config.d_ff, kGroupEncoder),
      decoder_hidden("decoder.hidden", config.d_model, config.decoder_hidden, kGroupDecoder),
      decoder_out("decoder.out", config.decoder_hidden, 1, kGroupDecoder),
      config_(config) {
    config.validate();
    embeddings.collect(params_);
    sentence_encoder.collect(params_);
    document_encoder.collect(params_);
    decoder_hidden.collect(params_);
    decoder_out.collect(params_);
}

void OrderingModel::init(uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x6d6f64656cULL));
    embeddings.init(rng);
    sentence_encoder.init(rng);
    document_encoder.init(rng);
    decoder_hidden.init(rng);
    decoder_out.init(rng);
}

ScoreVector OrderingModel::forward(const EncodedInput& input, Rng* dropout_rng) {
    const size_t n = input.n_sentences;
    if (n > config_.max_sentences) {
        throw Error("model", "too_many_sentences",
                    std::to_string(n) + " sentences, limit " + std::to_string(config_.max_sentences));
    }
    if (input.length() > config_.max_seq_len) {
        throw Error("model", "sequence_too_long", "input exceeds max_seq_len");
    }

    Tensor2D x = embed_dropout_.forward(embeddings.forward(input), config_.dropout, dropout_rng);
    Tensor2D tokens = sentence_encoder.forward(x, input.attention_mask, config_.dropout, dropout_rng);

    // Gather one row per sentence at its [CLS] slot.
    Tensor2D sent(n, config_.d_model);
    for (size_t i = 0; i < n; ++i) {
        const int slot = input.cls_slots[i];
        std::copy_n(tokens.row(static_cast<size_t>(slot)), config_.d_model, sent.row(i));
    }

    // Sentence slots are all real here; padded documents in a batch would
    // carry false entries instead.
    cached_sentence_mask_.assign(n, true);
    Tensor2D doc = document_encoder.forward(sent, cached_sentence_mask_, config_.dropout, dropout_rng);

    Tensor2D hidden = decoder_gelu_.forward(decoder_hidden.forward(doc));
    Tensor2D out = decoder_out.forward(hidden);

    cached_cls_slots_ = input.cls_slots;
    cached_seq_len_ = input.length();
    has_forward_ = true;

    ScoreVector z;
    z.scores.resize(n);
    for (size_t i = 0; i < n; ++i) z.scores[i] = out.at(i, 0);
    return z;
}

void OrderingModel::backward(const std::vector<real>& dz) {
    if (!has_forward_) throw Error("nn", "backward_before_forward", "OrderingModel");
    has_forward_ = false;
    const size_t n = cached_cls_slots_.size();
    if (dz.size() != n) throw Error("model", "shape_mismatch", "dz length != n_sentences");

    Tensor2D dout(n, 1);
    for (size_t i = 0; i < n; ++i) dout.at(i, 0) = dz[i];

    Tensor2D dhidden = decoder_gelu_.backward(decoder_out.backward(dout));
    Tensor2D ddoc = decoder_hidden.backward(dhidden);
    Tensor2D dsent = document_encoder.backward(ddoc);

    // Scatter sentence gradients back to their [CLS] rows.
    Tensor2D dtokens(cached_seq_len_, config_.d_model);
    for (size_t i = 0; i < n; ++i) {
        real* dst = dtokens.row(static_cast<size_t>(cached_cls_slots_[i]));
        const real* src = dsent.row(i);
        for (size_t j = 0; j < config_.d_model; ++j) dst[j] += src[j];
    }

    Tensor2D dx = sentence_encoder.backward(dtokens);
    embeddings.backward(embed_dropout_.backward(dx));
}

void OrderingModel::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

// ---------------------------------------------------------------------------
// PairModel

PairModel::PairModel(const ModelConfig& config)
    : embeddings(config, kGroupEncoder),
      encoder("pair_encoder", config.n_sent_layers, config.d_model, config.n_heads, config.d_ff,
              kGroupEncoder),
      head_hidden("pair_head.hidden", config.d_model, config.decoder_hidden, kGroupDecoder),
      head_out("pair_head.out", config.decoder_hidden, 1, kGroupDecoder),
      config_(config) {
    config.validate();
    embeddings.collect(params_);
    encoder.collect(params_);
    head_hidden.collect(params_);
    head_out.collect(params_);
}

void PairModel::init(uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x70616972ULL));
    embeddings.init(rng);
    encoder.init(rng);
    head_hidden.init(rng);
    head_out.init(rng);
}

real PairModel::forward(const EncodedInput& input, Rng* dropout_rng) {
    if (input.length() > config_.max_seq_len) {
        throw Error("model", "sequence_too_long", "pair input exceeds max_seq_len");
    }
    Tensor2D x = embed_dropout_.forward(embeddings.forward(input), config_.dropout, dropout_rng);
    Tensor2D tokens = encoder.forward(x, input.attention_mask, config_.dropout, dropout_rng);

    Tensor2D cls(1, config_.d_model);
    std::copy_n(tokens.row(static_cast<size_t>(input.cls_slots[0])), config_.d_model, cls.row(0));
    cached_seq_len_ = input.length();

    Tensor2D hidden = head_gelu_.forward(head_hidden.forward(cls));
    Tensor2D out = head_out.forward(hidden);
    has_forward_ = true;
    return out.at(0, 0);
}

void PairModel::backward(real dlogit) {
    if (!has_forward_) throw Error("nn", "backward_before_forward", "PairModel");
    has_forward_ = false;
    Tensor2D dout(1, 1);
    dout.at(0, 0) = dlogit;
    Tensor2D dcls = head_hidden.backward(head_gelu_.backward(head_out.backward(dout)));

    Tensor2D dtokens(cached_seq_len_, config_.d_model);
    std::copy_n(dcls.row(0), config_.d_model, dtokens.row(0));
    Tensor2D dx = encoder.backward(dtokens);
    embeddings.backward(embed_dropout_.backward(dx));
}

void PairModel::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const OrderingModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("model", "write_failed", "cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u32(out, kFormatVersion);
    write_u32(out, kKindOrdering);
    write_config(out, model.config());
    write_params(out, model.params());
    if (!out) throw Error("model", "write_failed", "short write to " + path);
}

void save_checkpoint(const PairModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("model", "write_failed", "cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u32(out, kFormatVersion);
    write_u32(out, kKindPair);
    write_config(out, model.config());
    write_params(out, model.params());
    if (!out) throw Error("model", "write_failed", "short write to " + path);
}

std::unique_ptr<OrderingModel> load_ordering_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    const uint32_t kind = open_checkpoint(in, path);
    if (kind != kKindOrdering) {
        throw Error("model", "checkpoint_mismatch", "not an ordering-model checkpoint: " + path);
    }
    const ModelConfig config = read_config(in);
    auto model = std::make_unique<OrderingModel>(config);
    read_params(in, model->params());
    return model;
}

std::unique_ptr<PairModel> load_pair_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    const uint32_t kind = open_checkpoint(in, path);
    if (kind != kKindPair) {
        throw Error("model", "checkpoint_mismatch", "not a pair-model checkpoint: " + path);
    }
    const ModelConfig config = read_config(in);
    auto model = std::make_unique<PairModel>(config);
    read_params(in, model->params());
    return model;
}

}  // namespace sentord
