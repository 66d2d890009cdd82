#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "uvrec/conv.hpp"
#include "uvrec/grid_ops.hpp"
#include "uvrec/sincode.hpp"
#include "uvrec/tensor.hpp"
#include "uvrec/visibility.hpp"

namespace uvrec {

// Trainable convolution pair of the image-form expansion: a 1-D conv over the
// raster-ordered sample sequence, then a 2-D conv over the scattered grid.
struct IllustrationParams {
    Tensor conv1_w, conv1_b;  // [C_mid x 4 x K1], [C_mid]
    Tensor conv2_w, conv2_b;  // [C_out x C_mid x K2 x K2], [C_out]
};

inline IllustrationParams make_illustration_params(Rng& rng, std::size_t c_mid = 4, std::size_t c_out = 4,
                                                   std::size_t k1 = 5, std::size_t k2 = 3) {
    IllustrationParams p;
    const double b1 = std::sqrt(1.0 / static_cast<double>(4 * k1));
    p.conv1_w = Tensor::uniform({c_mid, 4, k1}, rng, -b1, b1, true);
    p.conv1_b = Tensor::zeros({c_mid}, true);
    const double b2 = std::sqrt(1.0 / static_cast<double>(c_mid * k2 * k2));
    p.conv2_w = Tensor::uniform({c_out, c_mid, k2, k2}, rng, -b2, b2, true);
    p.conv2_b = Tensor::zeros({c_out}, true);
    return p;
}

// Raster-ordered (u, v, re, im) rows of a visibility set: the shared input
// sequence of the image-form expansion.  Returned indices give the sort order
// so callers can align per-sample quantities.
inline std::vector<std::size_t> raster_order(const VisibilitySet& vs) {
    std::vector<std::size_t> idx(vs.samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const UVSample& sa = vs.samples[a];
        const UVSample& sb = vs.samples[b];
        return sa.row != sb.row ? sa.row < sb.row : sa.col < sb.col;
    });
    return idx;
}

// Expand sparse visibility into a dense C x N x N feature map: order samples
// into a 4 x L sequence, 1-D convolve, scatter each feature column onto the
// sample's uv cell, 2-D convolve.  Gradients flow to both conv parameter
// groups (and nothing else).
inline Tensor image_illustration_transform(const VisibilitySet& vs, const IllustrationParams& p) {
    if (vs.samples.empty()) throw UsageError("image_illustration_transform: empty visibility set");
    const std::vector<std::size_t> order = raster_order(vs);
    const std::size_t L = order.size();
    Tensor seq = Tensor::zeros({4, L});
    std::vector<std::pair<double, double>> pos(L);
    for (std::size_t i = 0; i < L; ++i) {
        const UVSample& s = vs.samples[order[i]];
        seq.at(0, i) = s.u;
        seq.at(1, i) = s.v;
        seq.at(2, i) = s.re;
        seq.at(3, i) = s.im;
        pos[i] = {static_cast<double>(s.row), static_cast<double>(s.col)};
    }
    Tensor h = conv1d(seq, p.conv1_w, p.conv1_b);
    Tensor g = scatter_bilinear(h, pos, vs.n, vs.n);
    return conv2d(g, p.conv2_w, p.conv2_b);
}

struct DatasetMeta {
    std::string name;
    std::string subject;
};

struct SampleStats {
    std::size_t n_samples = 0;
    double amp_mean = 0.0, amp_std = 0.0, amp_min = 0.0, amp_max = 0.0;
    double phase_mean = 0.0;  // circular mean
    double uvdist_max = 0.0;
    double coverage = 0.0;
};

struct TextPrompt {
    std::string dataset_block;
    std::string sample_block;
    std::string full;
};

namespace detail {

// Fixed prompt number format: 6 significant digits, trailing zeros kept so
// rendering is injective enough to round-trip through parse.
inline std::string fmt_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%#.6g", v);
    return std::string(buf);
}

inline const char* const kSampleKeys[8] = {"n_samples", "amp_mean", "amp_std",  "amp_min",
                                           "amp_max",   "phase_mean", "uvdist_max", "coverage"};

}  // namespace detail

inline SampleStats compute_sample_stats(const VisibilitySet& vs) {
    if (vs.samples.empty()) throw UsageError("compute_sample_stats: empty visibility set");
    SampleStats st;
    st.n_samples = vs.samples.size();
    double sum = 0.0, sum2 = 0.0, sin_sum = 0.0, cos_sum = 0.0;
    st.amp_min = 1e300;
    for (const UVSample& s : vs.samples) {
        const double amp = std::hypot(s.re, s.im);
        sum += amp;
        sum2 += amp * amp;
        st.amp_min = std::min(st.amp_min, amp);
        st.amp_max = std::max(st.amp_max, amp);
        const double ph = std::atan2(s.im, s.re);
        sin_sum += std::sin(ph);
        cos_sum += std::cos(ph);
        st.uvdist_max = std::max(st.uvdist_max, std::hypot(s.u, s.v));
    }
    const double n = static_cast<double>(st.n_samples);
    st.amp_mean = sum / n;
    st.amp_std = std::sqrt(std::max(0.0, sum2 / n - st.amp_mean * st.amp_mean));
    st.phase_mean = std::atan2(sin_sum, cos_sum);
    std::size_t covered = 0;
    for (std::uint8_t m : vs.mask) covered += m;
    st.coverage = static_cast<double>(covered) / static_cast<double>(vs.n * vs.n);
    return st;
}

inline std::string render_sample_block(const SampleStats& st) {
    const double vals[7] = {st.amp_mean, st.amp_std,    st.amp_min, st.amp_max,
                            st.phase_mean, st.uvdist_max, st.coverage};
    std::string out = std::string(detail::kSampleKeys[0]) + "=" + std::to_string(st.n_samples);
    for (int i = 0; i < 7; ++i) out += std::string(" ") + detail::kSampleKeys[i + 1] + "=" + detail::fmt_g6(vals[i]);
    return out;
}

// Strict inverse of render_sample_block: the 8 keys, in order, space-joined.
inline SampleStats parse_sample_block(const std::string& block) {
    std::vector<std::string> toks;
    std::size_t start = 0;
    while (start < block.size()) {
        std::size_t sp = block.find(' ', start);
        if (sp == std::string::npos) sp = block.size();
        if (sp > start) toks.push_back(block.substr(start, sp - start));
        start = sp + 1;
    }
    if (toks.size() != 8) throw UsageError("parse_sample_block: expected 8 fields, got " + std::to_string(toks.size()));
    SampleStats st;
    double vals[7] = {};
    for (std::size_t i = 0; i < 8; ++i) {
        const std::string key = std::string(detail::kSampleKeys[i]) + "=";
        if (toks[i].rfind(key, 0) != 0) throw UsageError("parse_sample_block: expected key " + key + "in '" + toks[i] + "'");
        const std::string val = toks[i].substr(key.size());
        char* end = nullptr;
        if (i == 0) {
            st.n_samples = std::strtoull(val.c_str(), &end, 10);
        } else {
            vals[i - 1] = std::strtod(val.c_str(), &end);
        }
        if (end == nullptr || *end != '\0') throw UsageError("parse_sample_block: bad value '" + val + "'");
    }
    st.amp_mean = vals[0];
    st.amp_std = vals[1];
    st.amp_min = vals[2];
    st.amp_max = vals[3];
    st.phase_mean = vals[4];
    st.uvdist_max = vals[5];
    st.coverage = vals[6];
    return st;
}

// Render the text-form modality: a fixed dataset block plus the sample
// statistics in fixed order and formatting.
inline TextPrompt text_rendering_transform(const VisibilitySet& vs, const DatasetMeta& meta) {
    TextPrompt p;
    const std::string name = meta.name.empty() ? "unnamed-survey" : meta.name;
    const std::string subject = meta.subject.empty() ? "unknown-subject" : meta.subject;
    p.dataset_block = "dataset=" + name + " subject=" + subject;
    p.sample_block = render_sample_block(compute_sample_stats(vs));
    p.full = p.dataset_block + " " + p.sample_block;
    return p;
}

// Deterministic frozen encoder standing in for a pre-trained model: a fixed
// seeded projection (visual) or embedding table (textual).  Weights never
// participate in gradients; (kind, seed, dim) fully determine them.
struct FrozenEncoder {
    std::string kind;  // "visual" | "textual"
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    std::size_t channels = 0;  // visual only
    std::size_t patch = 0;     // visual only
    Tensor weights;            // visual: [C*P*P x d]; textual: [vocab x d]
};

namespace detail {

inline Rng encoder_rng(const std::string& kind, std::uint64_t seed) {
    return Rng(mix_seed(seed, fnv1a(kind.data(), kind.size())));
}

}  // namespace detail

inline FrozenEncoder make_visual_encoder(std::uint64_t seed, std::size_t dim = 64, std::size_t channels = 4,
                                         std::size_t patch = 8) {
    if (dim % 4 != 0) throw ConfigError("make_visual_encoder: dim must be divisible by 4 for position codes");
    FrozenEncoder e;
    e.kind = "visual";
    e.seed = seed;
    e.dim = dim;
    e.channels = channels;
    e.patch = patch;
    Rng rng = detail::encoder_rng(e.kind, seed);
    const std::size_t fan_in = channels * patch * patch;
    const double b = std::sqrt(1.0 / static_cast<double>(fan_in));
    e.weights = Tensor::uniform({fan_in, dim}, rng, -b, b);  // bias-free, no grad
    return e;
}

inline FrozenEncoder make_textual_encoder(std::uint64_t seed, std::size_t dim = 64, std::size_t vocab = 4096) {
    if (dim % 2 != 0) throw ConfigError("make_textual_encoder: dim must be even for value codes");
    FrozenEncoder e;
    e.kind = "textual";
    e.seed = seed;
    e.dim = dim;
    Rng rng = detail::encoder_rng(e.kind, seed);
    const double b = std::sqrt(1.0 / static_cast<double>(dim));
    e.weights = Tensor::uniform({vocab, dim}, rng, -b, b);
    return e;
}

// Encode the image-form map into patch tokens: flatten P x P patches, project
// with the frozen (bias-free) matrix, add fixed 2-D sinusoidal position
// codes.  Gradients flow through the map, never into the encoder.
inline Tensor vkg_encode(const Tensor& map, const FrozenEncoder& enc) {
    if (enc.kind != "visual") throw UsageError("vkg_encode: encoder kind is '" + enc.kind + "', want visual");
    if (map.rank() != 3 || map.dim(0) != enc.channels)
        throw ShapeError("vkg_encode: map " + shape_str(map.shape()) + " does not match encoder channels " +
                         std::to_string(enc.channels));
    const std::size_t p = enc.patch;
    if (map.dim(1) % p != 0 || map.dim(2) % p != 0)
        throw ShapeError("vkg_encode: map " + shape_str(map.shape()) + " not divisible into " + std::to_string(p) +
                         "x" + std::to_string(p) + " patches");
    Tensor tokens = matmul(extract_patches(map, p), enc.weights);
    const std::size_t rows = map.dim(1) / p, cols = map.dim(2) / p;
    Tensor pos = Tensor::zeros({rows * cols, enc.dim});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const std::vector<double> code = position_code_2d(static_cast<double>(r), static_cast<double>(c), enc.dim);
            std::copy(code.begin(), code.end(), pos.data().begin() + static_cast<std::ptrdiff_t>((r * cols + c) * enc.dim));
        }
    return add(tokens, pos);
}

// Encode the text-form prompt into a fixed-length token tensor: whitespace
// tokens split at '=' into word and value parts; words hash into the frozen
// vocabulary, numbers get a scaled sinusoidal value code (same basis as the
// visual position codes).  Constant output: no gradient participation.
inline Tensor ikg_encode(const TextPrompt& prompt, const FrozenEncoder& enc, std::size_t t_t = 32) {
    if (enc.kind != "textual") throw UsageError("ikg_encode: encoder kind is '" + enc.kind + "', want textual");
    const std::size_t d = enc.dim;
    const std::size_t vocab = enc.weights.dim(0);
    Tensor out = Tensor::zeros({t_t, d});
    std::size_t row = 0;
    const double value_scale = std::sqrt(1.0 / static_cast<double>(d));
    auto emit_word = [&](const std::string& w) {
        if (row >= t_t || w.empty()) return;
        const std::size_t v = fnv1a(w.data(), w.size()) % vocab;
        for (std::size_t j = 0; j < d; ++j) out.at(row, j) = enc.weights.at(v, j);
        ++row;
    };
    auto emit_token = [&](const std::string& tok) {
        if (tok.empty()) return;
        char* end = nullptr;
        const double num = std::strtod(tok.c_str(), &end);
        if (end != nullptr && *end == '\0' && end != tok.c_str()) {
            if (row >= t_t) return;
            const std::vector<double> code = sinusoid_code(num, d);
            for (std::size_t j = 0; j < d; ++j) out.at(row, j) = value_scale * code[j];
            ++row;
        } else {
            emit_word(tok);
        }
    };
    std::size_t start = 0;
    while (start < prompt.full.size() && row < t_t) {
        std::size_t sp = prompt.full.find(' ', start);
        if (sp == std::string::npos) sp = prompt.full.size();
        if (sp > start) {
            const std::string tok = prompt.full.substr(start, sp - start);
            const std::size_t eq = tok.find('=');
            if (eq != std::string::npos) {
                emit_word(tok.substr(0, eq));
                emit_token(tok.substr(eq + 1));
            } else {
                emit_token(tok);
            }
        }
        start = sp + 1;
    }
    return out;  // rows past the last token stay exact zero
}

}  // namespace uvrec
