#pragma once
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "uvrec/sincode.hpp"
#include "uvrec/tensor.hpp"
#include "uvrec/visibility.hpp"

namespace uvrec {

// Raw per-sample token features: (u, v, re, im) plus sinusoidal features of
// u and v (8 frequencies each), giving L x 36.  Constant w.r.t. gradients.
inline Tensor visibility_tokens(const VisibilitySet& vs) {
    if (vs.samples.empty()) throw UsageError("visibility_tokens: empty visibility set");
    const std::size_t L = vs.samples.size();
    const std::size_t d_in = 4 + 16 + 16;
    Tensor t = Tensor::zeros({L, d_in});
    for (std::size_t i = 0; i < L; ++i) {
        const UVSample& s = vs.samples[i];
        t.at(i, 0) = s.u;
        t.at(i, 1) = s.v;
        t.at(i, 2) = s.re;
        t.at(i, 3) = s.im;
        const std::vector<double> cu = sinusoid_code(s.u, 16);
        const std::vector<double> cv = sinusoid_code(s.v, 16);
        for (std::size_t j = 0; j < 16; ++j) {
            t.at(i, 4 + j) = cu[j];
            t.at(i, 20 + j) = cv[j];
        }
    }
    return t;
}

struct VqgLayer {
    Tensor ln1_g, ln1_b;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_g, ln2_b;
    Tensor ff1_w, ff1_b, ff2_w, ff2_b;
};

// Trainable visibility-query generator: learned summary tokens prepended to
// projected sample tokens, run through a small pre-norm transformer encoder.
struct VqgParams {
    std::size_t d = 0, heads = 0, t_q = 0;
    bool use_position_codes = true;  // index codes on sample tokens only
    Tensor in_w, in_b;               // [d_in x d], [d]
    Tensor summary;                  // [T_q x d], learned
    std::vector<VqgLayer> layers;
    Tensor lnf_g, lnf_b;

    std::vector<Tensor> trainable() const {
        std::vector<Tensor> v = {in_w, in_b, summary};
        for (const VqgLayer& l : layers) {
            for (const Tensor& t : {l.ln1_g, l.ln1_b, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo, l.bo,
                                    l.ln2_g, l.ln2_b, l.ff1_w, l.ff1_b, l.ff2_w, l.ff2_b})
                v.push_back(t);
        }
        v.push_back(lnf_g);
        v.push_back(lnf_b);
        return v;
    }
};

namespace detail {

inline Tensor affine_init(Rng& rng, std::size_t in, std::size_t out) {
    const double b = std::sqrt(1.0 / static_cast<double>(in));
    return Tensor::uniform({in, out}, rng, -b, b, true);
}

}  // namespace detail

inline VqgParams make_vqg_params(Rng& rng, std::size_t d = 64, std::size_t heads = 4, std::size_t t_q = 16,
                                 std::size_t n_layers = 2, std::size_t d_in = 36) {
    if (heads == 0 || d % heads != 0)
        throw ConfigError("make_vqg_params: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    VqgParams p;
    p.d = d;
    p.heads = heads;
    p.t_q = t_q;
    p.in_w = detail::affine_init(rng, d_in, d);
    p.in_b = Tensor::zeros({d}, true);
    const double bs = std::sqrt(1.0 / static_cast<double>(d));
    p.summary = Tensor::uniform({t_q, d}, rng, -bs, bs, true);
    for (std::size_t i = 0; i < n_layers; ++i) {
        VqgLayer l;
        l.ln1_g = Tensor::full({d}, 1.0, true);
        l.ln1_b = Tensor::zeros({d}, true);
        l.wq = detail::affine_init(rng, d, d);
        l.bq = Tensor::zeros({d}, true);
        l.wk = detail::affine_init(rng, d, d);
        l.bk = Tensor::zeros({d}, true);
        l.wv = detail::affine_init(rng, d, d);
        l.bv = Tensor::zeros({d}, true);
        l.wo = detail::affine_init(rng, d, d);
        l.bo = Tensor::zeros({d}, true);
        l.ln2_g = Tensor::full({d}, 1.0, true);
        l.ln2_b = Tensor::zeros({d}, true);
        l.ff1_w = detail::affine_init(rng, d, 4 * d);
        l.ff1_b = Tensor::zeros({4 * d}, true);
        l.ff2_w = detail::affine_init(rng, 4 * d, d);
        l.ff2_b = Tensor::zeros({d}, true);
        p.layers.push_back(l);
    }
    p.lnf_g = Tensor::full({d}, 1.0, true);
    p.lnf_b = Tensor::zeros({d}, true);
    return p;
}

namespace detail {

inline Tensor multi_head_self_attention(const Tensor& x, const VqgLayer& l, std::size_t heads) {
    const std::size_t d = x.dim(1);
    const std::size_t dh = d / heads;
    Tensor q = add_row_bias(matmul(x, l.wq), l.bq);
    Tensor k = add_row_bias(matmul(x, l.wk), l.bk);
    Tensor v = add_row_bias(matmul(x, l.wv), l.bv);
    Tensor merged;
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        Tensor a = softmax_rows(scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh))));
        Tensor oh = matmul(a, vh);
        merged = h == 0 ? oh : concat_last_dim(merged, oh);
    }
    return add_row_bias(matmul(merged, l.wo), l.bo);
}

}  // namespace detail

// Encode visibility tokens into the query feature: T_q summary-token outputs
// of the transformer.  Index position codes are added to sample tokens only,
// so with them disabled the output is sample-order invariant.
inline Tensor vqg_encode(const Tensor& vis_tokens, const VqgParams& p) {
    if (vis_tokens.rank() != 2 || vis_tokens.dim(1) != p.in_w.dim(0))
        throw ShapeError("vqg_encode: tokens " + shape_str(vis_tokens.shape()) + " do not match input dim " +
                         std::to_string(p.in_w.dim(0)));
    const std::size_t L = vis_tokens.dim(0);
    Tensor x = add_row_bias(matmul(vis_tokens, p.in_w), p.in_b);
    if (p.use_position_codes) {
        Tensor pos = Tensor::zeros({L, p.d});
        for (std::size_t i = 0; i < L; ++i) {
            const std::vector<double> code = sinusoid_code(static_cast<double>(i), p.d);
            std::copy(code.begin(), code.end(), pos.data().begin() + static_cast<std::ptrdiff_t>(i * p.d));
        }
        x = add(x, pos);
    }
    Tensor tokens = concat_rows(p.summary, x);
    for (const VqgLayer& l : p.layers) {
        tokens = add(tokens, detail::multi_head_self_attention(layer_norm(tokens, l.ln1_g, l.ln1_b), l, p.heads));
        Tensor h = layer_norm(tokens, l.ln2_g, l.ln2_b);
        Tensor f = add_row_bias(matmul(relu(add_row_bias(matmul(h, l.ff1_w), l.ff1_b)), l.ff2_w), l.ff2_b);
        tokens = add(tokens, f);
    }
    return slice_rows(layer_norm(tokens, p.lnf_g, p.lnf_b), 0, p.t_q);
}

// Row-wise concatenation of modality token blocks, visual first.  Blocks with
// zero rows (disabled modalities) are skipped.
inline Tensor build_knowledge_pool(const std::vector<Tensor>& blocks) {
    Tensor pool;
    for (const Tensor& b : blocks) {
        if (!b.defined() || b.dim(0) == 0) continue;
        if (!pool.defined()) {
            pool = b;
        } else {
            if (b.dim(1) != pool.dim(1))
                throw ShapeError("build_knowledge_pool: dim mismatch " + shape_str(pool.shape()) + " vs " +
                                 shape_str(b.shape()));
            pool = concat_rows(pool, b);
        }
    }
    if (!pool.defined()) throw UsageError("build_knowledge_pool: all blocks empty");
    return pool;
}

inline Tensor build_knowledge_pool(const Tensor& visual, const Tensor& textual) {
    return build_knowledge_pool(std::vector<Tensor>{visual, textual});
}

// Projection-free multi-head cross-attention: per head, softmax(q k^T / √dh) k
// with the pool rows acting as both keys and values (no learned Q/K/V — the
// trainable set leaves no parameters for them).
inline Tensor crossmodal_attention(const Tensor& query, const Tensor& pool, std::size_t heads) {
    if (!pool.defined() || pool.dim(0) == 0) throw UsageError("crossmodal_attention: empty knowledge pool");
    if (query.dim(1) != pool.dim(1))
        throw ShapeError("crossmodal_attention: query " + shape_str(query.shape()) + " vs pool " +
                         shape_str(pool.shape()));
    const std::size_t d = query.dim(1);
    if (heads == 0 || d % heads != 0)
        throw ConfigError("crossmodal_attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    const std::size_t dh = d / heads;
    Tensor merged;
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(query, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(pool, h * dh, (h + 1) * dh);
        Tensor a = softmax_rows(scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh))));
        Tensor oh = matmul(a, kh);
        merged = h == 0 ? oh : concat_last_dim(merged, oh);
    }
    return merged;
}

// Residual fusion: the multimodal feature is attention output plus query.
inline Tensor fuse_residual(const Tensor& kappa, const Tensor& zeta) { return add(kappa, zeta); }

struct FeatureStats {
    double mean = 0.0;
    double std = 0.0;
    double entropy = 0.0;
};

// Mean, population std, and entropy of the 64-bin value histogram (natural
// log, zero bins skipped).  A constant tensor has std 0 and entropy 0.
inline FeatureStats feature_stats(const Tensor& t) {
    if (!t.defined() || t.size() == 0) throw UsageError("feature_stats: empty tensor");
    FeatureStats st;
    const std::vector<double>& v = t.data();
    double sum = 0.0, sum2 = 0.0, lo = v[0], hi = v[0];
    for (double x : v) {
        sum += x;
        sum2 += x * x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double n = static_cast<double>(v.size());
    st.mean = sum / n;
    st.std = std::sqrt(std::max(0.0, sum2 / n - st.mean * st.mean));
    if (hi > lo) {
        constexpr std::size_t kBins = 64;
        std::vector<std::size_t> hist(kBins, 0);
        for (double x : v) {
            auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(kBins));
            ++hist[std::min(b, kBins - 1)];
        }
        for (std::size_t c : hist) {
            if (c == 0) continue;
            const double pr = static_cast<double>(c) / n;
            st.entropy -= pr * std::log(pr);
        }
    }
    return st;
}

}  // namespace uvrec
