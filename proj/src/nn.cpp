#include "sentord/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sentord {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_forward(bool has_forward, const char* where) {
    if (!has_forward) {
        throw Error("nn", "backward_before_forward", std::string(where) + ".backward called without forward");
    }
}

}  // namespace

std::vector<real> softmax_row(const std::vector<real>& x) {
    std::vector<real> out(x.size());
    if (x.empty()) return out;
    real mx = x[0];
    for (real v : x) mx = std::max(mx, v);
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double e = std::exp(double(x[i]) - double(mx));
        out[i] = real(e);
        sum += e;
    }
    const double inv = 1.0 / sum;
    for (real& v : out) v = real(double(v) * inv);
    return out;
}

void masked_softmax_rows(Tensor2D& scores, const std::vector<bool>& key_mask) {
    for (size_t i = 0; i < scores.rows; ++i) {
        real* s = scores.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < scores.cols; ++j) {
            if (key_mask[j]) mx = std::max(mx, double(s[j]));
        }
        double sum = 0.0;
        for (size_t j = 0; j < scores.cols; ++j) {
            if (key_mask[j]) {
                const double e = std::exp(double(s[j]) - mx);
                s[j] = real(e);
                sum += e;
            } else {
                s[j] = real(0);
            }
        }
        const double inv = 1.0 / sum;
        for (size_t j = 0; j < scores.cols; ++j) s[j] = real(double(s[j]) * inv);
    }
}

real gelu(real x) {
    return real(0.5 * double(x) * (1.0 + std::erf(double(x) * kInvSqrt2)));
}

real gelu_grad(real x) {
    const double xd = double(x);
    const double cdf = 0.5 * (1.0 + std::erf(xd * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xd * xd);
    return real(cdf + xd * pdf);
}

// ---------------------------------------------------------------------------
// Affine

Affine::Affine(const std::string& name, size_t in, size_t out, int group)
    : weight(name + ".weight", in, out, true, group),
      bias(name + ".bias", 1, out, false, group) {}

void Affine::init(Rng& rng, double sigma) {
    for (real& v : weight.w.data) v = real(rng.truncated_normal(sigma));
    bias.w.zero();
}

Tensor2D Affine::forward(const Tensor2D& x) {
    if (x.cols != weight.w.rows) throw Error("nn", "shape_mismatch", weight.name + " input width");
    cached_x_ = x;
    has_forward_ = true;
    Tensor2D y = matmul(x, weight.w);
    for (size_t i = 0; i < y.rows; ++i) {
        real* yi = y.row(i);
        const real* b = bias.w.row(0);
        for (size_t j = 0; j < y.cols; ++j) yi[j] += b[j];
    }
    return y;
}

Tensor2D Affine::backward(const Tensor2D& dy) {
    require_forward(has_forward_, "Affine");
    has_forward_ = false;
    add_inplace(weight.g, matmul_at_b(cached_x_, dy));
    for (size_t i = 0; i < dy.rows; ++i) {
        const real* di = dy.row(i);
        real* bg = bias.g.row(0);
        for (size_t j = 0; j < dy.cols; ++j) bg[j] += di[j];
    }
    return matmul_a_bt(dy, weight.w);
}

void Affine::collect(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// LayerNorm

LayerNorm::LayerNorm(const std::string& name, size_t dim, int group)
    : gain(name + ".gain", 1, dim, false, group), bias(name + ".bias", 1, dim, false, group) {
    for (real& v : gain.w.data) v = real(1);
}

Tensor2D LayerNorm::forward(const Tensor2D& x) {
    constexpr double eps = 1e-5;
    cached_xhat_ = Tensor2D(x.rows, x.cols);
    cached_inv_std_.assign(x.rows, 0.0);
    Tensor2D y(x.rows, x.cols);
    for (size_t i = 0; i < x.rows; ++i) {
        const real* xi = x.row(i);
        double mean = 0.0;
        for (size_t j = 0; j < x.cols; ++j) mean += double(xi[j]);
        mean /= double(x.cols);
        double var = 0.0;
        for (size_t j = 0; j < x.cols; ++j) {
            const double d = double(xi[j]) - mean;
            var += d * d;
        }
        var /= double(x.cols);
        const double inv_std = 1.0 / std::sqrt(var + eps);
        cached_inv_std_[i] = inv_std;
        real* xh = cached_xhat_.row(i);
        real* yi = y.row(i);
        const real* g = gain.w.row(0);
        const real* b = bias.w.row(0);
        for (size_t j = 0; j < x.cols; ++j) {
            const double h = (double(xi[j]) - mean) * inv_std;
            xh[j] = real(h);
            yi[j] = real(h * double(g[j]) + double(b[j]));
        }
    }
    has_forward_ = true;
    return y;
}

Tensor2D LayerNorm::backward(const Tensor2D& dy) {
    require_forward(has_forward_, "LayerNorm");
    has_forward_ = false;
    Tensor2D dx(dy.rows, dy.cols);
    const size_t d = dy.cols;
    for (size_t i = 0; i < dy.rows; ++i) {
        const real* dyi = dy.row(i);
        const real* xh = cached_xhat_.row(i);
        const real* g = gain.w.row(0);
        real* gg = gain.g.row(0);
        real* bg = bias.g.row(0);
        double sum_dh = 0.0, sum_dh_xhat = 0.0;
        for (size_t j = 0; j < d; ++j) {
            gg[j] += dyi[j] * xh[j];
            bg[j] += dyi[j];
            const double dh = double(dyi[j]) * double(g[j]);
            sum_dh += dh;
            sum_dh_xhat += dh * double(xh[j]);
        }
        const double inv_std = cached_inv_std_[i];
        real* dxi = dx.row(i);
        for (size_t j = 0; j < d; ++j) {
            const double dh = double(dyi[j]) * double(g[j]);
            dxi[j] = real(inv_std * (dh - (sum_dh + double(xh[j]) * sum_dh_xhat) / double(d)));
        }
    }
    return dx;
}

void LayerNorm::collect(std::vector<Param*>& out) {
    out.push_back(&gain);
    out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// Gelu

Tensor2D Gelu::forward(const Tensor2D& x) {
    cached_x_ = x;
    has_forward_ = true;
    Tensor2D y(x.rows, x.cols);
    for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = gelu(x.data[i]);
    return y;
}

Tensor2D Gelu::backward(const Tensor2D& dy) {
    require_forward(has_forward_, "Gelu");
    has_forward_ = false;
    Tensor2D dx(dy.rows, dy.cols);
    for (size_t i = 0; i < dy.data.size(); ++i) {
        dx.data[i] = dy.data[i] * gelu_grad(cached_x_.data[i]);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Tensor2D Dropout::forward(const Tensor2D& x, double p, Rng* rng) {
    has_forward_ = true;
    active_ = rng != nullptr && p > 0.0;
    if (!active_) return x;
    cached_mask_ = Tensor2D(x.rows, x.cols);
    const real scale = real(1.0 / (1.0 - p));
    Tensor2D y(x.rows, x.cols);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const real keep = rng->uniform() >= p ? scale : real(0);
        cached_mask_.data[i] = keep;
        y.data[i] = x.data[i] * keep;
    }
    return y;
}

Tensor2D Dropout::backward(const Tensor2D& dy) {
    require_forward(has_forward_, "Dropout");
    has_forward_ = false;
    if (!active_) return dy;
    Tensor2D dx(dy.rows, dy.cols);
    for (size_t i = 0; i < dy.data.size(); ++i) dx.data[i] = dy.data[i] * cached_mask_.data[i];
    return dx;
}

// ---------------------------------------------------------------------------
// MultiHeadSelfAttention

MultiHeadSelfAttention::MultiHeadSelfAttention(const std::string& name, size_t d_model,
                                               size_t n_heads_in, int group)
    : query(name + ".query", d_model, d_model, group),
      key(name + ".key", d_model, d_model, group),
      value(name + ".value", d_model, d_model, group),
      output(name + ".output", d_model, d_model, group),
      n_heads(n_heads_in) {
    if (n_heads_in == 0 || d_model % n_heads_in != 0) {
        throw Error("nn", "bad_config", "model width not divisible by head count");
    }
    head_dim_ = d_model / n_heads_in;
}

void MultiHeadSelfAttention::init(Rng& rng, double sigma) {
    query.init(rng, sigma);
    key.init(rng, sigma);
    value.init(rng, sigma);
    output.init(rng, sigma);
}

Tensor2D MultiHeadSelfAttention::forward(const Tensor2D& x, const std::vector<bool>& mask) {
    const size_t L = x.rows;
    if (mask.size() != L) throw Error("nn", "shape_mismatch", "attention mask length");

    cached_q_ = query.forward(x);
    cached_k_ = key.forward(x);
    cached_v_ = value.forward(x);
    cached_mask_ = mask;
    cached_attn_.assign(n_heads, Tensor2D());

    const real scale = real(1.0 / std::sqrt(double(head_dim_)));
    cached_ctx_ = Tensor2D(L, x.cols);
    for (size_t h = 0; h < n_heads; ++h) {
        const size_t off = h * head_dim_;
        Tensor2D scores(L, L);
        for (size_t i = 0; i < L; ++i) {
            const real* qi = cached_q_.row(i) + off;
            real* si = scores.row(i);
            for (size_t j = 0; j < L; ++j) {
                const real* kj = cached_k_.row(j) + off;
                double acc = 0.0;
                for (size_t t = 0; t < head_dim_; ++t) acc += double(qi[t]) * double(kj[t]);
                si[j] = real(acc) * scale;
            }
        }
        masked_softmax_rows(scores, mask);
        for (size_t i = 0; i < L; ++i) {
            const real* ai = scores.row(i);
            real* ci = cached_ctx_.row(i) + off;
            for (size_t j = 0; j < L; ++j) {
                const real aij = ai[j];
                if (aij == real(0)) continue;
                const real* vj = cached_v_.row(j) + off;
                for (size_t t = 0; t < head_dim_; ++t) ci[t] += aij * vj[t];
            }
        }
        cached_attn_[h] = std::move(scores);
    }
    has_forward_ = true;
    return output.forward(cached_ctx_);
}

Tensor2D MultiHeadSelfAttention::backward(const Tensor2D& dy) {
    require_forward(has_forward_, "MultiHeadSelfAttention");
    has_forward_ = false;

    Tensor2D dctx = output.backward(dy);
    const size_t L = dctx.rows;
    const real scale = real(1.0 / std::sqrt(double(head_dim_)));

    Tensor2D dq(L, dctx.cols), dk(L, dctx.cols), dv(L, dctx.cols);
    for (size_t h = 0; h < n_heads; ++h) {
        const size_t off = h * head_dim_;
        const Tensor2D& attn = cached_attn_[h];

        // dA = dctx_h * V_h^T ; dV_h = A^T * dctx_h
        Tensor2D dattn(L, L);
        for (size_t i = 0; i < L; ++i) {
            const real* dci = dctx.row(i) + off;
            real* dai = dattn.row(i);
            const real* ai = attn.row(i);
            for (size_t j = 0; j < L; ++j) {
                const real* vj = cached_v_.row(j) + off;
                double acc = 0.0;
                for (size_t t = 0; t < head_dim_; ++t) acc += double(dci[t]) * double(vj[t]);
                dai[j] = real(acc);
                if (ai[j] != real(0)) {
                    real* dvj = dv.row(j) + off;
                    for (size_t t = 0; t < head_dim_; ++t) dvj[t] += ai[j] * dci[t];
                }
            }
        }

        // Softmax backward per row: ds = A o (dA - sum(dA o A)).
        for (size_t i = 0; i < L; ++i) {
            const real* ai = attn.row(i);
            real* dai = dattn.row(i);
            double dot = 0.0;
            for (size_t j = 0; j < L; ++j) dot += double(dai[j]) * double(ai[j]);
            for (size_t j = 0; j < L; ++j) {
                dai[j] = cached_mask_[j] ? real(double(ai[j]) * (double(dai[j]) - dot)) : real(0);
            }
        }

        // dQ_h = ds * K_h * scale ; dK_h = ds^T * Q_h * scale
        for (size_t i = 0; i < L; ++i) {
            const real* dai = dattn.row(i);
            real* dqi = dq.row(i) + off;
            const real* qi = cached_q_.row(i) + off;
            for (size_t j = 0; j < L; ++j) {
                const real ds = dai[j] * scale;
                if (ds == real(0)) continue;
                const real* kj = cached_k_.row(j) + off;
                real* dkj = dk.row(j) + off;
                for (size_t t = 0; t < head_dim_; ++t) {
                    dqi[t] += ds * kj[t];
                    dkj[t] += ds * qi[t];
                }
            }
        }
    }

    Tensor2D dx = query.backward(dq);
    add_inplace(dx, key.backward(dk));
    add_inplace(dx, value.backward(dv));
    return dx;
}

void MultiHeadSelfAttention::collect(std::vector<Param*>& out) {
    query.collect(out);
    key.collect(out);
    value.collect(out);
    output.collect(out);
}

// ---------------------------------------------------------------------------
// TransformerLayer

TransformerLayer::TransformerLayer(const std::string& name, size_t d_model, size_t n_heads,
                                   size_t d_ff, int group)
    : norm_attn(name + ".norm_attn", d_model, group),
      norm_ff(name + ".norm_ff", d_model, group),
      attn(name + ".attn", d_model, n_heads, group),
      ff_in(name + ".ff_in", d_model, d_ff, group),
      ff_out(name + ".ff_out", d_ff, d_model, group) {}

void TransformerLayer::init(Rng& rng, double sigma) {
    attn.init(rng, sigma);
    ff_in.init(rng, sigma);
    ff_out.init(rng, sigma);
}

Tensor2D TransformerLayer::forward(const Tensor2D& x, const std::vector<bool>& mask,
                                   double dropout_p, Rng* dropout_rng) {
    Tensor2D mid = x;
    add_inplace(mid, drop_attn_.forward(attn.forward(norm_attn.forward(x), mask), dropout_p,
                                        dropout_rng));
    Tensor2D out = mid;
    add_inplace(out, drop_ff_.forward(ff_out.forward(gelu_.forward(ff_in.forward(
                                          norm_ff.forward(mid)))),
                                      dropout_p, dropout_rng));
    has_forward_ = true;
    return out;
}

Tensor2D TransformerLayer::backward(const Tensor2D& dy) {
    require_forward(has_forward_, "TransformerLayer");
    has_forward_ = false;
    Tensor2D dmid = dy;
    add_inplace(dmid, norm_ff.backward(ff_in.backward(
                          gelu_.backward(ff_out.backward(drop_ff_.backward(dy))))));
    Tensor2D dx = dmid;
    add_inplace(dx, norm_attn.backward(attn.backward(drop_attn_.backward(dmid))));
    return dx;
}

void TransformerLayer::collect(std::vector<Param*>& out) {
    norm_attn.collect(out);
    attn.collect(out);
    norm_ff.collect(out);
    ff_in.collect(out);
    ff_out.collect(out);
}

// ---------------------------------------------------------------------------

double clip_grad_norm(const std::vector<Param*>& params, double max_norm) {
    double sq = 0.0;
    for (const Param* p : params) {
        for (real v : p->g.data) sq += double(v) * double(v);
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const real scale = real(max_norm / norm);
        for (Param* p : params) {
            for (real& v : p->g.data) v *= scale;
        }
    }
    return norm;
}

}  // namespace sentord
