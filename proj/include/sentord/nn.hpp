#pragma once

#include <string>
#include <vector>

#include "sentord/common.hpp"
#include "sentord/tensor.hpp"

namespace sentord {

// Optimizer parameter groups.
constexpr int kGroupEncoder = 0;
constexpr int kGroupDecoder = 1;

// A trainable tensor with its gradient accumulator. Gradients sum across
// forward/backward passes until zero_grad.
struct Param {
    std::string name;
    Tensor2D w;
    Tensor2D g;
    bool decay = true;   // decoupled weight decay applies
    int group = kGroupEncoder;

    Param() = default;
    Param(std::string n, size_t rows, size_t cols, bool use_decay = true,
          int grp = kGroupEncoder)
        : name(std::move(n)), w(rows, cols), g(rows, cols), decay(use_decay), group(grp) {}

    void zero_grad() { g.zero(); }
};

// Numerically stable softmax over one row (max subtraction, double
// accumulation). Shared kernel with the listwise losses.
std::vector<real> softmax_row(const std::vector<real>& x);

// In-place masked softmax over each row of `scores`; masked columns get
// probability zero and are excluded from normalization.
void masked_softmax_rows(Tensor2D& scores, const std::vector<bool>& key_mask);

real gelu(real x);
real gelu_grad(real x);

class Affine {
public:
    Affine() = default;
    Affine(const std::string& name, size_t in, size_t out, int group);

    void init(Rng& rng, double sigma = 0.02);
    Tensor2D forward(const Tensor2D& x);
    Tensor2D backward(const Tensor2D& dy);
    void collect(std::vector<Param*>& out);

    Param weight;  // (in x out)
    Param bias;    // (1 x out), no weight decay

private:
    Tensor2D cached_x_;
    bool has_forward_ = false;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(const std::string& name, size_t dim, int group);

    Tensor2D forward(const Tensor2D& x);
    Tensor2D backward(const Tensor2D& dy);
    void collect(std::vector<Param*>& out);

    Param gain;  // (1 x d), init ones, no weight decay
    Param bias;  // (1 x d), no weight decay

private:
    Tensor2D cached_xhat_;
    std::vector<double> cached_inv_std_;
    bool has_forward_ = false;
};

class Gelu {
public:
    Tensor2D forward(const Tensor2D& x);
    Tensor2D backward(const Tensor2D& dy);

private:
    Tensor2D cached_x_;
    bool has_forward_ = false;
};

// Inverted dropout; identity when rng is null or p == 0.
class Dropout {
public:
    Tensor2D forward(const Tensor2D& x, double p, Rng* rng);
    Tensor2D backward(const Tensor2D& dy);

private:
    Tensor2D cached_mask_;
    bool active_ = false;
    bool has_forward_ = false;
};

class MultiHeadSelfAttention {
public:
    MultiHeadSelfAttention() = default;
    MultiHeadSelfAttention(const std::string& name, size_t d_model, size_t n_heads, int group);

    void init(Rng& rng, double sigma = 0.02);
    // x is (L x d); mask flags which positions are real keys.
    Tensor2D forward(const Tensor2D& x, const std::vector<bool>& mask);
    Tensor2D backward(const Tensor2D& dy);
    void collect(std::vector<Param*>& out);

    Affine query, key, value, output;
    size_t n_heads = 1;

private:
    size_t head_dim_ = 0;
    Tensor2D cached_q_, cached_k_, cached_v_, cached_ctx_;
    std::vector<Tensor2D> cached_attn_;  // one (L x L) per head
    std::vector<bool> cached_mask_;
    bool has_forward_ = false;
};

// Pre-norm residual block: y = x + Drop(MHSA(LN1(x))); out = y + Drop(FFN(LN2(y))).
class TransformerLayer {
public:
    TransformerLayer() = default;
    TransformerLayer(const std::string& name, size_t d_model, size_t n_heads, size_t d_ff,
                     int group);

    void init(Rng& rng, double sigma = 0.02);
    Tensor2D forward(const Tensor2D& x, const std::vector<bool>& mask, double dropout_p,
                     Rng* dropout_rng);
    Tensor2D backward(const Tensor2D& dy);
    void collect(std::vector<Param*>& out);

    LayerNorm norm_attn, norm_ff;
    MultiHeadSelfAttention attn;
    Affine ff_in, ff_out;

private:
    Gelu gelu_;
    Dropout drop_attn_, drop_ff_;
    bool has_forward_ = false;
};

// Global L2-norm gradient clipping; returns the pre-clip norm.
double clip_grad_norm(const std::vector<Param*>& params, double max_norm);

}  // namespace sentord
