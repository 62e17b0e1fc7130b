#include "sentord/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sentord/losses.hpp"
#include "sentord/model.hpp"
#include "sentord/nn.hpp"

namespace sentord {

namespace {

Tensor2D random_tensor(Rng& rng, size_t rows, size_t cols, double scale = 1.0) {
    Tensor2D t(rows, cols);
    for (real& v : t.data) v = real((rng.uniform() * 2.0 - 1.0) * scale);
    return t;
}

double weighted_sum(const Tensor2D& y, const Tensor2D& w) {
    double acc = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) acc += double(y.data[i]) * double(w.data[i]);
    return acc;
}

std::vector<bool> random_mask(Rng& rng, size_t n) {
    std::vector<bool> mask(n);
    size_t on = 0;
    for (size_t i = 0; i < n; ++i) {
        mask[i] = rng.uniform() > 0.3;
        if (mask[i]) ++on;
    }
    if (on == 0) mask[rng.below(n)] = true;
    return mask;
}

std::vector<int> random_perm(Rng& rng, size_t n) {
    std::vector<int> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
    for (size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    return perm;
}

ModelConfig tiny_config(Rng& rng) {
    ModelConfig c;
    c.vocab_size = 24;
    c.d_model = 8 + 4 * rng.below(2);  // 8 or 12
    c.n_heads = 2;
    c.d_ff = 16;
    c.n_sent_layers = 1;
    c.n_doc_layers = 1;
    c.decoder_hidden = 6;
    c.max_seq_len = 64;
    c.max_sentences = 10;
    c.dropout = 0.0;
    return c;
}

EncodedInput random_doc_input(Rng& rng, const ModelConfig& config, size_t n_sentences) {
    std::vector<std::vector<int>> sents(n_sentences);
    for (auto& s : sents) {
        const size_t len = 1 + rng.below(4);
        for (size_t t = 0; t < len; ++t) {
            s.push_back(kNumReserved + static_cast<int>(rng.below(config.vocab_size - kNumReserved)));
        }
    }
    return build_input(sents, config.max_seq_len, 8);
}

}  // namespace

void GradCheckReport::absorb(double rel_err, const std::string& label) {
    ++n_coords;
    if (rel_err > max_rel_err) {
        max_rel_err = rel_err;
        worst_case = label;
    }
}

void GradCheckReport::merge(const GradCheckReport& other) {
    n_coords += other.n_coords;
    n_cases += other.n_cases;
    if (other.max_rel_err > max_rel_err) {
        max_rel_err = other.max_rel_err;
        worst_case = other.worst_case;
    }
}

double fd_rel_err(double analytic, double fd) {
    const double denom = std::max({kFdFloor, std::fabs(analytic), std::fabs(fd)});
    return std::fabs(analytic - fd) / denom;
}

GradCheckReport check_coords(const std::function<double()>& eval, real* values,
                             const real* analytic, size_t count, const std::string& label) {
    GradCheckReport report;
    report.n_cases = 1;
    for (size_t i = 0; i < count; ++i) {
        const real saved = values[i];
        values[i] = real(double(saved) + kFdStep);
        const double up = eval();
        values[i] = real(double(saved) - kFdStep);
        const double down = eval();
        values[i] = saved;
        const double fd = (up - down) / (2.0 * kFdStep);
        report.absorb(fd_rel_err(double(analytic[i]), fd), label + "[" + std::to_string(i) + "]");
    }
    return report;
}

GradCheckReport gradcheck_softmax(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t n = 2 + rng.below(7);
        std::vector<real> x(n), w(n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = real(rng.uniform() * 4.0 - 2.0);
            w[i] = real(rng.uniform() * 2.0 - 1.0);
        }
        // L = sum w*p; dL/dx = p o (w - sum(w*p))
        const std::vector<real> p = softmax_row(x);
        double wp = 0.0;
        for (size_t i = 0; i < n; ++i) wp += double(w[i]) * double(p[i]);
        std::vector<real> analytic(n);
        for (size_t i = 0; i < n; ++i) analytic[i] = real(double(p[i]) * (double(w[i]) - wp));

        auto eval = [&]() {
            const std::vector<real> q = softmax_row(x);
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) acc += double(w[i]) * double(q[i]);
            return acc;
        };
        report.merge(check_coords(eval, x.data(), analytic.data(), n,
                                  "softmax/case" + std::to_string(c)));
    }
    return report;
}

GradCheckReport gradcheck_affine(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t rows = 1 + rng.below(4), in = 1 + rng.below(6), out = 1 + rng.below(6);
        Affine affine("affine", in, out, kGroupEncoder);
        affine.init(rng, 0.5);
        Tensor2D x = random_tensor(rng, rows, in);
        Tensor2D w = random_tensor(rng, rows, out);

        affine.weight.zero_grad();
        affine.bias.zero_grad();
        Tensor2D y = affine.forward(x);
        Tensor2D dx = affine.backward(w);
        (void)y;

        auto eval = [&]() { return weighted_sum(affine.forward(x), w); };
        const std::string label = "affine/case" + std::to_string(c);
        report.merge(check_coords(eval, x.data.data(), dx.data.data(), x.size(), label + "/x"));
        report.merge(check_coords(eval, affine.weight.w.data.data(), affine.weight.g.data.data(),
                                  affine.weight.w.size(), label + "/w"));
        report.merge(check_coords(eval, affine.bias.w.data.data(), affine.bias.g.data.data(),
                                  affine.bias.w.size(), label + "/b"));
    }
    return report;
}

GradCheckReport gradcheck_layernorm(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t rows = 1 + rng.below(4), d = 2 + rng.below(6);
        LayerNorm norm("ln", d, kGroupEncoder);
        for (real& v : norm.gain.w.data) v = real(0.5 + rng.uniform());
        for (real& v : norm.bias.w.data) v = real(rng.uniform() - 0.5);
        Tensor2D x = random_tensor(rng, rows, d, 2.0);
        Tensor2D w = random_tensor(rng, rows, d);

        norm.gain.zero_grad();
        norm.bias.zero_grad();
        norm.forward(x);
        Tensor2D dx = norm.backward(w);

        auto eval = [&]() { return weighted_sum(norm.forward(x), w); };
        const std::string label = "layernorm/case" + std::to_string(c);
        report.merge(check_coords(eval, x.data.data(), dx.data.data(), x.size(), label + "/x"));
        report.merge(check_coords(eval, norm.gain.w.data.data(), norm.gain.g.data.data(),
                                  norm.gain.w.size(), label + "/gain"));
        report.merge(check_coords(eval, norm.bias.w.data.data(), norm.bias.g.data.data(),
                                  norm.bias.w.size(), label + "/bias"));
    }
    return report;
}

GradCheckReport gradcheck_gelu(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t rows = 1 + rng.below(3), d = 1 + rng.below(8);
        Gelu act;
        Tensor2D x = random_tensor(rng, rows, d, 3.0);
        Tensor2D w = random_tensor(rng, rows, d);
        act.forward(x);
        Tensor2D dx = act.backward(w);
        auto eval = [&]() { return weighted_sum(act.forward(x), w); };
        report.merge(check_coords(eval, x.data.data(), dx.data.data(), x.size(),
                                  "gelu/case" + std::to_string(c)));
    }
    return report;
}

GradCheckReport gradcheck_attention(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t L = 2 + rng.below(5);
        const size_t heads = 1 + rng.below(2);
        const size_t d = heads * (2 + rng.below(3));
        MultiHeadSelfAttention attn("mhsa", d, heads, kGroupEncoder);
        attn.init(rng, 0.4);
        const std::vector<bool> mask = random_mask(rng, L);
        Tensor2D x = random_tensor(rng, L, d);
        Tensor2D w = random_tensor(rng, L, d);

        std::vector<Param*> params;
        attn.collect(params);
        for (Param* p : params) p->zero_grad();
        attn.forward(x, mask);
        Tensor2D dx = attn.backward(w);

        auto eval = [&]() { return weighted_sum(attn.forward(x, mask), w); };
        const std::string label = "attention/case" + std::to_string(c);
        report.merge(check_coords(eval, x.data.data(), dx.data.data(), x.size(), label + "/x"));
        for (Param* p : params) {
            report.merge(check_coords(eval, p->w.data.data(), p->g.data.data(), p->w.size(),
                                      label + "/" + p->name));
        }
    }
    return report;
}

GradCheckReport gradcheck_transformer_layer(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t L = 2 + rng.below(4);
        const size_t heads = 1 + rng.below(2);
        const size_t d = heads * (2 + rng.below(2));
        TransformerLayer layer("layer", d, heads, 2 * d, kGroupEncoder);
        layer.init(rng, 0.4);
        const std::vector<bool> mask = random_mask(rng, L);
        Tensor2D x = random_tensor(rng, L, d);
        Tensor2D w = random_tensor(rng, L, d);

        std::vector<Param*> params;
        layer.collect(params);
        for (Param* p : params) p->zero_grad();
        layer.forward(x, mask, 0.0, nullptr);
        Tensor2D dx = layer.backward(w);

        auto eval = [&]() { return weighted_sum(layer.forward(x, mask, 0.0, nullptr), w); };
        const std::string label = "transformer/case" + std::to_string(c);
        report.merge(check_coords(eval, x.data.data(), dx.data.data(), x.size(), label + "/x"));
        for (Param* p : params) {
            report.merge(check_coords(eval, p->w.data.data(), p->g.data.data(), p->w.size(),
                                      label + "/" + p->name));
        }
    }
    return report;
}

GradCheckReport gradcheck_list_mle(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const size_t n = 2 + rng.below(7);  // 2..8
        std::vector<real> z(n);
        for (real& v : z) v = real(rng.uniform() * 4.0 - 2.0);
        const std::vector<int> perm = random_perm(rng, n);
        const LossOutput out = list_mle(z, perm);
        auto eval = [&]() { return double(list_mle(z, perm).value); };
        report.merge(check_coords(eval, z.data(), out.grad.data(), n,
                                  "list_mle/case" + std::to_string(c)));
    }
    return report;
}

GradCheckReport gradcheck_margin_list_mle(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    const double gammas[4] = {0.25, 0.5, 0.75, 1.0};
    for (int c = 0; c < cases; ++c) {
        const size_t n = 2 + rng.below(7);
        LossConfig config;
        config.variant = LossVariant::margin_list_mle;
        config.gamma = gammas[rng.below(4)];

        // Keep every margin term away from its clamp boundary so the FD
        // probe never crosses the kink.
        std::vector<real> z(n);
        std::vector<int> perm;
        for (int attempt = 0; attempt < 200; ++attempt) {
            for (real& v : z) v = real(rng.uniform() * 2.0 - 1.0);
            perm = random_perm(rng, n);
            std::vector<double> ranked(n);
            for (size_t r = 0; r < n; ++r) ranked[r] = double(z[static_cast<size_t>(perm[r])]);
            bool clear = true;
            for (size_t j = 0; j + 1 < n && clear; ++j) {
                double mx = ranked[j];
                for (size_t l = j; l < n; ++l) mx = std::max(mx, ranked[l]);
                double denom = 0.0;
                for (size_t l = j; l < n; ++l) denom += std::exp(ranked[l] - mx);
                for (size_t k = j + 1; k + 1 < n; ++k) {
                    const double F = std::exp(ranked[k] - mx) / denom;
                    if (std::fabs(config.gamma - F) < 0.05) clear = false;
                }
            }
            if (clear) break;
        }

        const LossOutput out = margin_list_mle(z, perm, config);
        auto eval = [&]() { return double(margin_list_mle(z, perm, config).value); };
        report.merge(check_coords(eval, z.data(), out.grad.data(), n,
                                  "margin_list_mle/case" + std::to_string(c)));
    }
    return report;
}

GradCheckReport gradcheck_full_model(uint64_t seed, int cases) {
    GradCheckReport report;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const ModelConfig config = tiny_config(rng);
        OrderingModel model(config);
        model.init(rng.next_u64());
        const size_t n = 2 + rng.below(7);  // 2..8
        const EncodedInput input = random_doc_input(rng, config, n);
        const std::vector<int> perm = random_perm(rng, n);
        LossConfig loss_config;
        loss_config.variant = (c % 2 == 0) ? LossVariant::list_mle : LossVariant::margin_list_mle;
        loss_config.gamma = 1.0;

        model.zero_grad();
        const ScoreVector z = model.forward(input);
        const LossOutput loss = compute_loss(z.scores, perm, loss_config);
        model.backward(loss.grad);

        auto eval = [&]() {
            OrderingModel& m = model;
            const ScoreVector zz = m.forward(input);
            return double(compute_loss(zz.scores, perm, loss_config).value);
        };
        const std::string label = "model/case" + std::to_string(c);
        for (Param* p : model.params()) {
            report.merge(check_coords(eval, p->w.data.data(), p->g.data.data(), p->w.size(),
                                      label + "/" + p->name));
        }
    }
    return report;
}

GradCheckReport gradcheck_all(uint64_t seed, int cases, std::ostream& out) {
    struct Suite {
        const char* name;
        GradCheckReport (*run)(uint64_t, int);
    };
    const Suite suites[] = {
        {"softmax", gradcheck_softmax},
        {"affine", gradcheck_affine},
        {"layernorm", gradcheck_layernorm},
        {"gelu", gradcheck_gelu},
        {"attention", gradcheck_attention},
        {"transformer_layer", gradcheck_transformer_layer},
        {"list_mle", gradcheck_list_mle},
        {"margin_list_mle", gradcheck_margin_list_mle},
        {"full_model", gradcheck_full_model},
    };
    GradCheckReport total;
    for (const Suite& suite : suites) {
        const GradCheckReport r = suite.run(Rng::derive(seed, std::hash<std::string>{}(suite.name)),
                                            cases);
        out << suite.name << ": max_rel_err=" << r.max_rel_err << " coords=" << r.n_coords
            << (r.ok() ? " ok" : " FAIL") << " (worst: " << r.worst_case << ")\n";
        total.merge(r);
    }
    out << "overall: max_rel_err=" << total.max_rel_err << " tolerance=" << kFdTolerance
        << (total.ok() ? " ok" : " FAIL") << "\n";
    return total;
}

}  // namespace sentord
