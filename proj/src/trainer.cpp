#include "sentord/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sentord/btsort.hpp"
#include "sentord/layout.hpp"

namespace sentord {

namespace {

using nlohmann::json;

// Stream tags for seed derivation.
constexpr uint64_t kStreamEpochOrder = 0x45504f43ULL;
constexpr uint64_t kStreamSentences = 0x53454e54ULL;
constexpr uint64_t kStreamDropout = 0x44524f50ULL;
constexpr uint64_t kStreamValid = 0x56414c44ULL;

struct DocTokens {
    std::string id;
    std::vector<std::vector<int>> sentence_ids;  // gold order
};

std::vector<DocTokens> tokenize_corpus(const Corpus& corpus, const Vocab& vocab) {
    std::vector<DocTokens> out;
    out.reserve(corpus.size());
    for (const Document& doc : corpus.documents) {
        DocTokens dt;
        dt.id = doc.id;
        for (const std::string& s : doc.sentences) dt.sentence_ids.push_back(encode(s, vocab));
        out.push_back(std::move(dt));
    }
    return out;
}

// Presented-order token lists plus the gold permutation, same generator as
// shuffle_document.
struct ShuffledTokens {
    std::vector<std::vector<int>> presented;
    std::vector<int> gold_perm;
};

ShuffledTokens shuffle_tokens(const DocTokens& doc, uint64_t seed) {
    const size_t n = doc.sentence_ids.size();
    const std::vector<int> order = random_permutation(n, seed);
    ShuffledTokens out;
    out.presented.resize(n);
    out.gold_perm.assign(n, 0);
    for (size_t pos = 0; pos < n; ++pos) {
        out.presented[pos] = doc.sentence_ids[static_cast<size_t>(order[pos])];
        out.gold_perm[static_cast<size_t>(order[pos])] = static_cast<int>(pos);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return buf;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw Error("trainer", "bad_config", "epochs must be >= 1");
    if (batch_size < 1) throw Error("trainer", "bad_config", "batch_size must be >= 1");
    if (warmup_frac < 0.0 || warmup_frac >= 1.0) {
        throw Error("trainer", "bad_config", "warmup_frac must be in [0, 1)");
    }
    model.validate();
}

std::string TrainConfig::to_json() const {
    json j;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["lr_encoder"] = lr_encoder;
    j["lr_decoder"] = lr_decoder;
    j["warmup_frac"] = warmup_frac;
    j["weight_decay"] = weight_decay;
    j["clip_norm"] = clip_norm;
    j["seed"] = seed;
    j["max_sent_tokens"] = max_sent_tokens;
    j["loss"] = loss.variant == LossVariant::list_mle ? "listmle" : "margin";
    j["gamma"] = loss.gamma;
    j["margin_sum_includes_last"] = loss.margin_sum_includes_last;
    j["model"] = {{"vocab_size", model.vocab_size},
                  {"d_model", model.d_model},
                  {"n_heads", model.n_heads},
                  {"d_ff", model.d_ff},
                  {"n_sent_layers", model.n_sent_layers},
                  {"n_doc_layers", model.n_doc_layers},
                  {"decoder_hidden", model.decoder_hidden},
                  {"max_seq_len", model.max_seq_len},
                  {"max_sentences", model.max_sentences},
                  {"dropout", model.dropout}};
    j["train"] = train_paths;
    j["valid"] = valid_path;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("trainer", "missing_file", "cannot open config: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error("trainer", "bad_config", "config is not a JSON object: " + path);
    }
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_encoder = j.value("lr_encoder", c.lr_encoder);
    c.lr_decoder = j.value("lr_decoder", c.lr_decoder);
    c.warmup_frac = j.value("warmup_frac", c.warmup_frac);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.max_sent_tokens = j.value("max_sent_tokens", c.max_sent_tokens);
    const std::string variant = j.value("loss", std::string("margin"));
    if (variant == "listmle") {
        c.loss.variant = LossVariant::list_mle;
    } else if (variant == "margin") {
        c.loss.variant = LossVariant::margin_list_mle;
    } else {
        throw Error("trainer", "bad_config", "unknown loss variant: " + variant);
    }
    c.loss.gamma = j.value("gamma", c.loss.gamma);
    c.loss.margin_sum_includes_last =
        j.value("margin_sum_includes_last", c.loss.margin_sum_includes_last);
    if (j.contains("model")) {
        const json& m = j["model"];
        c.model.vocab_size = m.value("vocab_size", c.model.vocab_size);
        c.model.d_model = m.value("d_model", c.model.d_model);
        c.model.n_heads = m.value("n_heads", c.model.n_heads);
        c.model.d_ff = m.value("d_ff", c.model.d_ff);
        c.model.n_sent_layers = m.value("n_sent_layers", c.model.n_sent_layers);
        c.model.n_doc_layers = m.value("n_doc_layers", c.model.n_doc_layers);
        c.model.decoder_hidden = m.value("decoder_hidden", c.model.decoder_hidden);
        c.model.max_seq_len = m.value("max_seq_len", c.model.max_seq_len);
        c.model.max_sentences = m.value("max_sentences", c.model.max_sentences);
        c.model.dropout = m.value("dropout", c.model.dropout);
    }
    if (j.contains("train")) c.train_paths = j["train"].get<std::vector<std::string>>();
    c.valid_path = j.value("valid", c.valid_path);
    return c;
}

std::string TrainHistory::to_jsonl() const {
    std::ostringstream out;
    for (const StepRecord& s : steps) {
        out << "{\"kind\": \"step\", \"step\": " << s.step << ", \"epoch\": " << s.epoch
            << ", \"loss\": " << format_double(s.loss)
            << ", \"lr_encoder\": " << format_double(s.lr_encoder)
            << ", \"lr_decoder\": " << format_double(s.lr_decoder) << "}\n";
    }
    for (const EpochRecord& e : epochs) {
        out << "{\"kind\": \"epoch\", \"epoch\": " << e.epoch
            << ", \"val_tau\": " << format_double(e.val_tau)
            << ", \"val_pmr\": " << format_double(e.val_pmr)
            << ", \"selection\": " << format_double(e.selection) << "}\n";
    }
    out << "{\"kind\": \"best\", \"epoch\": " << best_epoch
        << ", \"selection\": " << format_double(best_selection) << "}\n";
    return out.str();
}

void TrainHistory::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("trainer", "write_failed", "cannot write history: " + path);
    out << to_jsonl();
}

double lr_at(size_t step, size_t total_steps, double warmup_frac, double base) {
    if (total_steps == 0) return 0.0;
    const double warmup = warmup_frac * double(total_steps);
    const double s = double(std::min(step, total_steps));
    if (s < warmup) return base * s / warmup;
    if (double(total_steps) <= warmup) return 0.0;
    return base * (double(total_steps) - s) / (double(total_steps) - warmup);
}

AdamW::AdamW(std::vector<Param*> params, double weight_decay, double beta1, double beta2,
             double eps)
    : params_(std::move(params)),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {
    for (const Param* p : params_) {
        m_.emplace_back(p->w.rows, p->w.cols);
        v_.emplace_back(p->w.rows, p->w.cols);
    }
}

void AdamW::step(double lr_encoder, double lr_decoder) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
        Param& p = *params_[k];
        const double lr = p.group == kGroupDecoder ? lr_decoder : lr_encoder;
        real* w = p.w.data.data();
        const real* g = p.g.data.data();
        real* m = m_[k].data.data();
        real* v = v_[k].data.data();
        const double decay = p.decay ? weight_decay_ : 0.0;
        for (size_t i = 0; i < p.w.data.size(); ++i) {
            const double gi = double(g[i]);
            const double mi = beta1_ * double(m[i]) + (1.0 - beta1_) * gi;
            const double vi = beta2_ * double(v[i]) + (1.0 - beta2_) * gi * gi;
            m[i] = real(mi);
            v[i] = real(vi);
            const double update = (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
            w[i] = real(double(w[i]) - lr * update - lr * decay * double(w[i]));
        }
    }
}

namespace {

MetricsReport evaluate_tokens(OrderingModel& model, const std::vector<DocTokens>& docs,
                              uint64_t shuffle_seed, size_t max_sent_tokens) {
    std::vector<std::vector<int>> preds, golds;
    std::vector<std::string> ids;
    for (size_t d = 0; d < docs.size(); ++d) {
        const ShuffledTokens st = shuffle_tokens(docs[d], Rng::derive(shuffle_seed, d));
        const EncodedInput input =
            build_input(st.presented, model.config().max_seq_len, max_sent_tokens);
        const ScoreVector z = model.forward(input, nullptr);
        preds.push_back(predict_order(z));
        golds.push_back(st.gold_perm);
        ids.push_back(docs[d].id);
    }
    return evaluate_orders(preds, golds, ids);
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<Corpus>& train_corpora,
                  const Corpus& valid, const Vocab& vocab) {
    config.validate();
    if (train_corpora.empty()) throw Error("trainer", "bad_config", "need at least one train corpus");
    for (const Corpus& c : train_corpora) {
        if (c.documents.empty()) throw Error("trainer", "empty_corpus", "empty train corpus " + c.name);
    }
    if (valid.documents.empty()) throw Error("trainer", "empty_corpus", "empty validation corpus");

    // Ensemble mode: concatenate all train corpora before shuffling.
    std::vector<DocTokens> train_docs;
    for (const Corpus& c : train_corpora) {
        std::vector<DocTokens> docs = tokenize_corpus(c, vocab);
        for (auto& d : docs) train_docs.push_back(std::move(d));
    }
    const std::vector<DocTokens> valid_docs = tokenize_corpus(valid, vocab);

    TrainResult result;
    result.model = std::make_unique<OrderingModel>(config.model);
    OrderingModel& model = *result.model;
    model.init(config.seed);

    AdamW optimizer(model.params(), config.weight_decay);
    Rng dropout_rng(Rng::derive(config.seed, kStreamDropout));

    const size_t n_train = train_docs.size();
    const size_t steps_per_epoch = (n_train + config.batch_size - 1) / config.batch_size;
    const size_t total_steps = config.epochs * steps_per_epoch;
    const uint64_t valid_seed = Rng::derive(config.seed, kStreamValid);

    std::vector<Tensor2D> best_params;
    double last_finite_loss = 0.0;
    size_t step = 0;

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<int> order = random_permutation(
            n_train, Rng::derive(config.seed, kStreamEpochOrder + epoch));

        for (size_t begin = 0; begin < n_train; begin += config.batch_size) {
            const size_t end = std::min(begin + config.batch_size, n_train);
            model.zero_grad();
            double batch_loss = 0.0;
            size_t batch_docs = 0;
            for (size_t k = begin; k < end; ++k) {
                const DocTokens& doc = train_docs[static_cast<size_t>(order[k])];
                const size_t n = doc.sentence_ids.size();
                if (n < 2) continue;  // no ordering signal in a 1-sentence document
                const uint64_t sent_seed =
                    Rng::derive(config.seed, kStreamSentences + epoch * 0x100000000ULL + k);
                const ShuffledTokens st = shuffle_tokens(doc, sent_seed);
                const EncodedInput input =
                    build_input(st.presented, config.model.max_seq_len, config.max_sent_tokens);
                const ScoreVector z = model.forward(input, &dropout_rng);
                const LossOutput loss = compute_loss(z.scores, st.gold_perm, config.loss);
                batch_loss += double(loss.value);
                ++batch_docs;
                model.backward(loss.grad);
            }

            const double mean_loss = batch_docs > 0 ? batch_loss / double(batch_docs) : 0.0;
            if (!std::isfinite(mean_loss)) {
                throw Error("trainer", "divergence",
                            "non-finite loss at step " + std::to_string(step) +
                                "; last finite loss " + std::to_string(last_finite_loss));
            }
            last_finite_loss = mean_loss;

            if (batch_docs > 0) {
                const real inv = real(1.0 / double(batch_docs));
                for (Param* p : model.params()) {
                    for (real& g : p->g.data) g *= inv;
                }
            }
            clip_grad_norm(model.params(), config.clip_norm);
            const double lr_e = lr_at(step, total_steps, config.warmup_frac, config.lr_encoder);
            const double lr_d = lr_at(step, total_steps, config.warmup_frac, config.lr_decoder);
            optimizer.step(lr_e, lr_d);

            StepRecord rec;
            rec.step = step;
            rec.epoch = epoch;
            rec.loss = mean_loss;
            rec.lr_encoder = lr_e;
            rec.lr_decoder = lr_d;
            result.history.steps.push_back(rec);
            ++step;
        }

        const MetricsReport report =
            evaluate_tokens(model, valid_docs, valid_seed, config.max_sent_tokens);
        EpochRecord erec;
        erec.epoch = epoch;
        erec.val_tau = report.tau_mean;
        erec.val_pmr = report.pmr;
        erec.selection = report.tau_mean + report.pmr / 100.0;
        result.history.epochs.push_back(erec);

        if (best_params.empty() || erec.selection > result.history.best_selection) {
            result.history.best_selection = erec.selection;
            result.history.best_epoch = epoch;
            best_params.clear();
            for (const Param* p : model.params()) best_params.push_back(p->w);
        }
    }

    // Restore the best-selection snapshot.
    for (size_t k = 0; k < model.params().size(); ++k) {
        model.params()[k]->w = best_params[k];
    }
    return result;
}

MetricsReport evaluate(OrderingModel& model, const Vocab& vocab, const Corpus& corpus,
                       uint64_t shuffle_seed, size_t max_sent_tokens) {
    if (corpus.documents.empty()) throw Error("trainer", "empty_corpus", "nothing to evaluate");
    return evaluate_tokens(model, tokenize_corpus(corpus, vocab), shuffle_seed, max_sent_tokens);
}

// ---------------------------------------------------------------------------
// Pairwise baseline

namespace {

struct PairExample {
    size_t doc = 0;
    size_t first = 0;
    size_t second = 0;
    real label = real(0);
};

MetricsReport evaluate_pair_tokens(PairModel& model, const Vocab& vocab,
                                   const std::vector<Document>& docs, uint64_t shuffle_seed,
                                   size_t max_sent_tokens) {
    std::vector<std::vector<int>> preds, golds;
    std::vector<std::string> ids;
    ModelPairScorer base_scorer(model, vocab, max_sent_tokens);
    for (size_t d = 0; d < docs.size(); ++d) {
        const ShuffledDocument sd = shuffle_document(docs[d], Rng::derive(shuffle_seed, d));
        if (sd.n_sentences() < 2) {
            preds.push_back({0});
            golds.push_back(sd.gold_perm);
        } else {
            const PairwiseMatrix matrix = pairwise_scores(sd, base_scorer);
            preds.push_back(topo_order(matrix));
            golds.push_back(sd.gold_perm);
        }
        ids.push_back(sd.doc_id);
    }
    return evaluate_orders(preds, golds, ids);
}

}  // namespace

PairTrainResult train_pair_model(const TrainConfig& config,
                                 const std::vector<Corpus>& train_corpora, const Corpus& valid,
                                 const Vocab& vocab) {
    config.validate();
    if (train_corpora.empty()) throw Error("trainer", "bad_config", "need at least one train corpus");

    std::vector<DocTokens> train_docs;
    for (const Corpus& c : train_corpora) {
        std::vector<DocTokens> docs = tokenize_corpus(c, vocab);
        for (auto& d : docs) train_docs.push_back(std::move(d));
    }

    PairTrainResult result;
    result.model = std::make_unique<PairModel>(config.model);
    PairModel& model = *result.model;
    model.init(config.seed);

    AdamW optimizer(model.params(), config.weight_decay);
    Rng dropout_rng(Rng::derive(config.seed, kStreamDropout));

    // All ordered pairs of presented positions; sentence orders reshuffled
    // each epoch.
    std::vector<ShuffledTokens> shuffled(train_docs.size());
    std::vector<PairExample> examples;
    auto reshuffle = [&](size_t epoch) {
        examples.clear();
        for (size_t d = 0; d < train_docs.size(); ++d) {
            shuffled[d] = shuffle_tokens(train_docs[d],
                                         Rng::derive(config.seed, kStreamSentences +
                                                                      epoch * 0x100000000ULL + d));
            const std::vector<int>& gold = shuffled[d].gold_perm;
            const size_t n = gold.size();
            std::vector<size_t> rank(n);
            for (size_t r = 0; r < n; ++r) rank[static_cast<size_t>(gold[r])] = r;
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < n; ++j) {
                    if (i == j) continue;
                    examples.push_back({d, i, j, rank[i] < rank[j] ? real(1) : real(0)});
                }
            }
        }
        const std::vector<int> order = random_permutation(
            examples.size(), Rng::derive(config.seed, kStreamEpochOrder + epoch));
        std::vector<PairExample> tmp(examples.size());
        for (size_t k = 0; k < examples.size(); ++k) {
            tmp[k] = examples[static_cast<size_t>(order[k])];
        }
        examples.swap(tmp);
    };

    reshuffle(0);
    const size_t per_epoch = (examples.size() + config.batch_size - 1) / config.batch_size;
    const size_t total_steps = config.epochs * per_epoch;
    const uint64_t valid_seed = Rng::derive(config.seed, kStreamValid);

    std::vector<Tensor2D> best_params;
    size_t step = 0;
    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (epoch > 0) reshuffle(epoch);
        for (size_t begin = 0; begin < examples.size(); begin += config.batch_size) {
            const size_t end = std::min(begin + config.batch_size, examples.size());
            model.zero_grad();
            double batch_loss = 0.0;
            for (size_t k = begin; k < end; ++k) {
                const PairExample& ex = examples[k];
                const ShuffledTokens& st = shuffled[ex.doc];
                const EncodedInput input =
                    build_pair_input(st.presented[ex.first], st.presented[ex.second],
                                     config.model.max_seq_len, config.max_sent_tokens);
                const real logit = model.forward(input, &dropout_rng);
                const double x = double(logit), y = double(ex.label);
                batch_loss += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::fabs(x)));
                const double sigmoid = 1.0 / (1.0 + std::exp(-x));
                model.backward(real((sigmoid - y) / double(end - begin)));
            }
            const double mean_loss = batch_loss / double(end - begin);
            if (!std::isfinite(mean_loss)) {
                throw Error("trainer", "divergence",
                            "non-finite pair loss at step " + std::to_string(step));
            }
            clip_grad_norm(model.params(), config.clip_norm);
            const double lr_e = lr_at(step, total_steps, config.warmup_frac, config.lr_encoder);
            const double lr_d = lr_at(step, total_steps, config.warmup_frac, config.lr_decoder);
            optimizer.step(lr_e, lr_d);

            StepRecord rec;
            rec.step = step;
            rec.epoch = epoch;
            rec.loss = mean_loss;
            rec.lr_encoder = lr_e;
            rec.lr_decoder = lr_d;
            result.history.steps.push_back(rec);
            ++step;
        }

        const MetricsReport report = evaluate_pair_tokens(model, vocab, valid.documents,
                                                          valid_seed, config.max_sent_tokens);
        EpochRecord erec;
        erec.epoch = epoch;
        erec.val_tau = report.tau_mean;
        erec.val_pmr = report.pmr;
        erec.selection = report.tau_mean + report.pmr / 100.0;
        result.history.epochs.push_back(erec);
        if (best_params.empty() || erec.selection > result.history.best_selection) {
            result.history.best_selection = erec.selection;
            result.history.best_epoch = epoch;
            best_params.clear();
            for (const Param* p : model.params()) best_params.push_back(p->w);
        }
    }

    for (size_t k = 0; k < model.params().size(); ++k) {
        model.params()[k]->w = best_params[k];
    }
    return result;
}

MetricsReport evaluate_pair_model(PairModel& model, const Vocab& vocab, const Corpus& corpus,
                                  uint64_t shuffle_seed, size_t max_sent_tokens) {
    if (corpus.documents.empty()) throw Error("trainer", "empty_corpus", "nothing to evaluate");
    return evaluate_pair_tokens(model, vocab, corpus.documents, shuffle_seed, max_sent_tokens);
}

}  // namespace sentord
