#pragma once
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "uvrec/fusion.hpp"
#include "uvrec/imaging.hpp"
#include "uvrec/metrics.hpp"
#include "uvrec/modality.hpp"
#include "uvrec/optim.hpp"
#include "uvrec/tensor_io.hpp"

namespace uvrec {

// Coordinate neural field over the uv grid: sinusoidal encoding of the
// normalized (u, v) cell coordinates through `depth` affine layers.  The
// output head has exactly 2 channels (re, im) and is zero-initialized, so an
// untrained field predicts zero everywhere off the measured cells.
struct NeuralField {
    std::size_t n = 0, width = 0, depth = 0, freqs = 0;
    // Extra fixed multiplier on the head output, on top of the per-sample
    // measured-amplitude scale applied in reconstruct().  Kept at 1; exposed
    // so calibration experiments can vary the output parameterization.
    double output_gain = 1.0;
    std::vector<Tensor> w, b;  // depth layers
    Tensor posenc;             // [n^2 x in_dim], constant, cached at build time

    std::size_t in_dim() const { return 2 + 4 * freqs; }

    std::vector<Tensor> trainable() const {
        std::vector<Tensor> v;
        for (const Tensor& t : w) v.push_back(t);
        for (const Tensor& t : b) v.push_back(t);
        return v;
    }
};

// Octave ladder sin/cos features of the centered, [-1,1]-normalized grid
// coordinates, plus the raw coordinates themselves.
inline Tensor field_position_encoding(std::size_t n, std::size_t freqs) {
    const std::size_t dim = 2 + 4 * freqs;
    Tensor enc = Tensor::zeros({n * n, dim});
    const double half = static_cast<double>(n) / 2.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double* row = enc.data().data() + (r * n + c) * dim;
            const double y = (static_cast<double>(r) - half) / half;
            const double x = (static_cast<double>(c) - half) / half;
            row[0] = y;
            row[1] = x;
            for (std::size_t k = 0; k < freqs; ++k) {
                const double f = std::ldexp(3.14159265358979323846, static_cast<int>(k));  // pi * 2^k
                row[2 + 4 * k + 0] = std::sin(f * y);
                row[2 + 4 * k + 1] = std::cos(f * y);
                row[2 + 4 * k + 2] = std::sin(f * x);
                row[2 + 4 * k + 3] = std::cos(f * x);
            }
        }
    return enc;
}

inline NeuralField make_neural_field(Rng& rng, std::size_t n, std::size_t width = 128, std::size_t depth = 5,
                                     std::size_t freqs = 16) {
    if (depth < 2) throw ConfigError("make_neural_field: depth must be at least 2");
    NeuralField f;
    f.n = n;
    f.width = width;
    f.depth = depth;
    f.freqs = freqs;
    f.posenc = field_position_encoding(n, freqs);
    std::size_t in = f.in_dim();
    for (std::size_t j = 0; j + 1 < depth; ++j) {
        f.w.push_back(detail::affine_init(rng, in, width));
        f.b.push_back(Tensor::zeros({width}, true));
        in = width;
    }
    f.w.push_back(Tensor::zeros({in, 2}, true));  // zero head: untrained output is exactly zero
    f.b.push_back(Tensor::zeros({2}, true));
    return f;
}

// Per-hidden-layer affine heads mapping pooled-eta chunks to (gamma, beta).
// The gamma bias starts at 1 so modulation begins near identity.
struct FilmHeads {
    std::vector<std::size_t> chunk_lo, chunk_hi;  // pooled-eta slice per hidden layer
    std::vector<Tensor> gw, gb, bw, bb;

    std::vector<Tensor> trainable() const {
        std::vector<Tensor> v;
        for (std::size_t j = 0; j < gw.size(); ++j) {
            v.push_back(gw[j]);
            v.push_back(gb[j]);
            v.push_back(bw[j]);
            v.push_back(bb[j]);
        }
        return v;
    }
};

inline FilmHeads make_film_heads(Rng& rng, std::size_t d, std::size_t width, std::size_t depth) {
    FilmHeads h;
    const std::size_t hidden = depth - 1;
    for (std::size_t j = 0; j < hidden; ++j) {
        const std::size_t lo = j * d / hidden, hi = (j + 1) * d / hidden;
        h.chunk_lo.push_back(lo);
        h.chunk_hi.push_back(hi);
        h.gw.push_back(detail::affine_init(rng, hi - lo, width));
        h.gb.push_back(Tensor::full({width}, 1.0, true));
        h.bw.push_back(detail::affine_init(rng, hi - lo, width));
        h.bb.push_back(Tensor::zeros({width}, true));
    }
    return h;
}

// Dense complex uv grid carried on the tape (separate re/im planes).
struct DenseVisibilityGrid {
    std::size_t n = 0;
    Tensor re, im;  // [n x n]
};

// Evaluate the conditioned field at every grid cell and enforce the data:
// pool eta over its tokens, chunk it into per-layer FiLM inputs, modulate
// each hidden activation, then hard-overwrite measured cells with the input
// samples and symmetrize to Hermitian form.  Measured cells survive both
// steps bitwise (their mirrors carry exactly conjugate values).
inline DenseVisibilityGrid reconstruct(const VisibilitySet& vs, const Tensor& eta, const NeuralField& field,
                                       const FilmHeads& film) {
    if (field.n != vs.n)
        throw ConfigError("reconstruct: field built for grid " + std::to_string(field.n) + ", set has " +
                          std::to_string(vs.n));
    if (film.gw.size() != field.depth - 1)
        throw ConfigError("reconstruct: film heads count " + std::to_string(film.gw.size()) + " != hidden layers " +
                          std::to_string(field.depth - 1));
    if (!eta.defined() || eta.rank() != 2 || film.chunk_hi.back() != eta.dim(1))
        throw ConfigError("reconstruct: eta width does not match film head chunks");
    Tensor pooled = mean_pool_tokens(eta);  // [1 x d]
    Tensor h = field.posenc;
    for (std::size_t j = 0; j + 1 < field.depth; ++j) {
        h = relu(add_row_bias(matmul(h, field.w[j]), field.b[j]));
        Tensor chunk = slice_cols(pooled, film.chunk_lo[j], film.chunk_hi[j]);
        Tensor gamma = reshape(add_row_bias(matmul(chunk, film.gw[j]), film.gb[j]), {field.width});
        Tensor beta = reshape(add_row_bias(matmul(chunk, film.bw[j]), film.bb[j]), {field.width});
        h = film_modulate(h, gamma, beta);
    }
    // Per-sample output normalization: the head works in units of the largest
    // measured amplitude (a constant derived from the input, never the truth).
    // Truth spectra span two orders of magnitude across samples while Adam
    // moves each weight about one lr per step; predicting in normalized units
    // removes that scale variance from the optimization.  Zero init still
    // yields an exactly-zero untrained output.
    double sample_scale = 0.0;
    for (const UVSample& s : vs.samples) sample_scale = std::max(sample_scale, std::hypot(s.re, s.im));
    if (sample_scale <= 0.0) sample_scale = 1.0;
    Tensor out = scale(add_row_bias(matmul(h, field.w[field.depth - 1]), field.b[field.depth - 1]),
                       field.output_gain * sample_scale);  // [n^2 x 2]
    const std::size_t n = vs.n;
    DenseVisibilityGrid grid;
    grid.n = n;
    grid.re = reshape(slice_cols(out, 0, 1), {n, n});
    grid.im = reshape(slice_cols(out, 1, 2), {n, n});

    Tensor meas_re = Tensor::zeros({n, n});
    Tensor meas_im = Tensor::zeros({n, n});
    for (const UVSample& s : vs.samples) {
        meas_re.at(s.row, s.col) = s.re;
        meas_im.at(s.row, s.col) = s.im;
    }
    grid.re = symmetrize_centered(mask_overwrite(grid.re, vs.mask, meas_re), +1.0);
    grid.im = symmetrize_centered(mask_overwrite(grid.im, vs.mask, meas_im), -1.0);
    return grid;
}

struct LossReport {
    Tensor loss;                    // scalar on the tape
    std::vector<double> abs_delta;  // per-cell |pred - truth|
    std::vector<double> omega;      // per-cell amplitude weight
    double psnr = 0.0, ssim = 0.0;  // of the imaged prediction vs imaged truth
};

// Amplitude-weighted spectral loss: omega = (rho / max rho + 1) |delta| acts
// as a fixed weight (no gradient flows through it), loss = mean(omega
// |delta|^2).  Also images both grids for PSNR/SSIM diagnostics.
inline LossReport spectral_loss(const DenseVisibilityGrid& pred, const ComplexGrid& truth) {
    const std::size_t n = pred.n;
    if (truth.n != n) throw ShapeError("spectral_loss: pred grid " + std::to_string(n) + " vs truth " + std::to_string(truth.n));
    double max_rho = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) max_rho = std::max(max_rho, std::hypot(truth.re[i], truth.im[i]));
    if (max_rho == 0.0) throw DegenerateError("spectral_loss: all-zero truth grid");

    Tensor dre = sub(pred.re, Tensor::from_data({n, n}, truth.re));
    Tensor dim = sub(pred.im, Tensor::from_data({n, n}, truth.im));
    LossReport rep;
    rep.abs_delta.resize(n * n);
    rep.omega.resize(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        rep.abs_delta[i] = std::hypot(dre.at(i), dim.at(i));
        const double rho = std::hypot(truth.re[i], truth.im[i]);
        rep.omega[i] = (rho / max_rho + 1.0) * rep.abs_delta[i];
    }
    Tensor w = Tensor::from_data({n, n}, rep.omega);  // detached weight
    rep.loss = mean_all(hadamard(w, add(hadamard(dre, dre), hadamard(dim, dim))));

    // image-domain diagnostics (inverse transform of the detached prediction;
    // real part only, so a non-Hermitian test grid still gets a score)
    ComplexGrid pg = ComplexGrid::zeros(n);
    pg.re = pred.re.data();
    pg.im = pred.im.data();
    const std::vector<double> pred_img = fft2_centered(pg, true).re;
    const std::vector<double> truth_img = fft2_centered(truth, true).re;
    rep.psnr = psnr(truth_img, pred_img, 1.0);
    rep.ssim = n % 8 == 0 ? ssim(truth_img, pred_img, n) : 0.0;
    return rep;
}

// The four trainable groups; frozen encoder weights are deliberately absent.
struct TrainableSet {
    std::vector<Tensor> theta_c1, theta_c2, theta_v, theta_r;

    std::vector<Tensor> all() const {
        std::vector<Tensor> v;
        for (const auto* g : {&theta_c1, &theta_c2, &theta_v, &theta_r})
            for (const Tensor& t : *g) v.push_back(t);
        return v;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (const Tensor& t : all()) c += t.size();
        return c;
    }
};

// Model dimensions; `fusion_mode` selects the ablation arm wiring.
struct ModelConfig {
    std::size_t n = 64;
    std::size_t d = 64, heads = 4, t_q = 16, t_t = 32;
    std::size_t channels = 4, patch = 8, c_mid = 4, k1 = 5, k2 = 3;
    std::size_t field_width = 128, field_depth = 5, field_freqs = 16;
    bool use_position_codes = true;
    std::string fusion_mode = "full";  // full | no_kb | no_visual | no_text | visibility_only
    std::uint64_t encoder_seed = 424242;
};

inline const std::vector<std::string>& fusion_modes() {
    static const std::vector<std::string> kModes = {"full", "no_kb", "no_visual", "no_text", "visibility_only"};
    return kModes;
}

struct Model {
    ModelConfig cfg;
    IllustrationParams illustration;
    VqgParams vqg;
    FrozenEncoder visual_enc, textual_enc;
    NeuralField field;
    FilmHeads film;

    TrainableSet trainable() const {
        TrainableSet t;
        t.theta_c1 = {illustration.conv1_w, illustration.conv1_b};
        t.theta_c2 = {illustration.conv2_w, illustration.conv2_b};
        t.theta_v = vqg.trainable();
        t.theta_r = field.trainable();
        for (const Tensor& x : film.trainable()) t.theta_r.push_back(x);
        return t;
    }
};

inline Model make_model(const ModelConfig& cfg, std::uint64_t seed) {
    bool known = false;
    for (const std::string& m : fusion_modes()) known = known || m == cfg.fusion_mode;
    if (!known) throw ConfigError("make_model: unknown fusion_mode '" + cfg.fusion_mode + "'");
    Model m;
    m.cfg = cfg;
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));
    m.illustration = make_illustration_params(rng, cfg.c_mid, cfg.channels, cfg.k1, cfg.k2);
    m.vqg = make_vqg_params(rng, cfg.d, cfg.heads, cfg.t_q);
    m.vqg.use_position_codes = cfg.use_position_codes;
    m.visual_enc = make_visual_encoder(cfg.encoder_seed, cfg.d, cfg.channels, cfg.patch);
    m.textual_enc = make_textual_encoder(cfg.encoder_seed, cfg.d);
    m.field = make_neural_field(rng, cfg.n, cfg.field_width, cfg.field_depth, cfg.field_freqs);
    m.film = make_film_heads(rng, cfg.d, cfg.field_width, cfg.field_depth);
    return m;
}

// Intermediate features of one fusion pass; xi is undefined for arms that
// build no knowledge pool (visibility_only, no_kb).
struct FusionTrace {
    Tensor zeta, xi, eta;
    bool has_xi = false;
};

inline FusionTrace forward_trace(const Model& m, const VisibilitySet& vs, const DatasetMeta& meta) {
    FusionTrace t;
    if (m.cfg.fusion_mode == "visibility_only") {
        t.zeta = vqg_encode(visibility_tokens(vs), m.vqg).detached();
        t.eta = Tensor::zeros({m.cfg.t_q, m.cfg.d});
        return t;
    }
    t.zeta = vqg_encode(visibility_tokens(vs), m.vqg);
    if (m.cfg.fusion_mode == "no_kb") {
        t.eta = t.zeta;
        return t;
    }
    std::vector<Tensor> blocks;
    if (m.cfg.fusion_mode != "no_visual")
        blocks.push_back(vkg_encode(image_illustration_transform(vs, m.illustration), m.visual_enc));
    if (m.cfg.fusion_mode != "no_text")
        blocks.push_back(ikg_encode(text_rendering_transform(vs, meta), m.textual_enc, m.cfg.t_t));
    t.xi = build_knowledge_pool(blocks);
    t.has_xi = true;
    t.eta = fuse_residual(crossmodal_attention(t.zeta, t.xi, m.cfg.heads), t.zeta);
    return t;
}

// Fused multimodal feature for one sample, wired per the configured arm.
inline Tensor forward_eta(const Model& m, const VisibilitySet& vs, const DatasetMeta& meta) {
    if (m.cfg.fusion_mode == "visibility_only") return Tensor::zeros({m.cfg.t_q, m.cfg.d});
    return forward_trace(m, vs, meta).eta;
}

// One dataset record: sky, its sparse noisy measurement, and the dense
// noiseless spectrum the loss trains against.
struct TrainingSample {
    SkyImage sky;
    VisibilitySet vs;
    ComplexGrid truth;
};

struct TrainConfig {
    std::size_t epochs = 8;
    AdamConfig adam;
    std::uint64_t seed = 1;
    double train_fraction = 1.0;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double loss = 0.0, psnr = 0.0, ssim = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    std::vector<std::size_t> used_indices;  // seeded-shuffle subset, train order base
    double seconds_per_step = 0.0;
};

// Per-sample optimization: forward the full pipeline, backprop the spectral
// loss, Adam-update the trainable set.  Deterministic for a fixed seed.
inline TrainResult train(Model& model, const std::vector<TrainingSample>& train_set, const DatasetMeta& meta,
                         const TrainConfig& cfg) {
    if (train_set.empty()) throw UsageError("train: empty training set");
    if (cfg.train_fraction <= 0.0 || cfg.train_fraction > 1.0)
        throw ConfigError("train: train_fraction must lie in (0, 1]");
    TrainResult res;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng pick(mix_seed(cfg.seed, 0x66726163ULL));
    pick.shuffle(order);
    const auto used = static_cast<std::size_t>(
        std::ceil(cfg.train_fraction * static_cast<double>(train_set.size())));
    order.resize(std::max<std::size_t>(1, used));
    res.used_indices = order;

    std::vector<Tensor> params = model.trainable().all();
    AdamState adam;
    std::size_t steps = 0;
    const std::clock_t t0 = std::clock();
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> epoch_order = order;
        Rng erng(mix_seed(cfg.seed, epoch));
        erng.shuffle(epoch_order);
        EpochMetrics em;
        em.epoch = epoch;
        for (std::size_t idx : epoch_order) {
            const TrainingSample& s = train_set[idx];
            for (Tensor& p : params) p.zero_grad();
            Tensor eta = forward_eta(model, s.vs, meta);
            DenseVisibilityGrid grid = reconstruct(s.vs, eta, model.field, model.film);
            LossReport rep = spectral_loss(grid, s.truth);
            backward(rep.loss);
            adam_step(params, adam, cfg.adam);
            em.loss += rep.loss.at(0);
            em.psnr += rep.psnr;
            em.ssim += rep.ssim;
            ++steps;
        }
        const auto cnt = static_cast<double>(epoch_order.size());
        em.loss /= cnt;
        em.psnr /= cnt;
        em.ssim /= cnt;
        res.history.push_back(em);
        if (!std::isfinite(em.loss)) throw DegenerateError("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    res.seconds_per_step = steps == 0 ? 0.0 : double(std::clock() - t0) / CLOCKS_PER_SEC / static_cast<double>(steps);
    return res;
}

inline void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& history) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("write_metrics_csv: cannot open " + path);
    std::fprintf(f, "epoch,loss,psnr,ssim\n");
    for (const EpochMetrics& m : history)
        std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", m.epoch, m.loss, m.psnr, m.ssim);
    std::fclose(f);
}

struct EvalRow {
    double psnr_model = 0.0, ssim_model = 0.0;
    double psnr_dirty = 0.0, ssim_dirty = 0.0;
    double psnr_clean = 0.0, ssim_clean = 0.0;
    std::size_t clean_iterations = 0;
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    double mean_psnr_model = 0.0, mean_ssim_model = 0.0;
    double mean_psnr_dirty = 0.0, mean_ssim_dirty = 0.0;
    double mean_psnr_clean = 0.0, mean_ssim_clean = 0.0;
};

using ReconstructFn = std::function<DenseVisibilityGrid(const Model&, const TrainingSample&, const DatasetMeta&)>;

inline DenseVisibilityGrid default_reconstruct(const Model& m, const TrainingSample& s, const DatasetMeta& meta) {
    return reconstruct(s.vs, forward_eta(m, s.vs, meta), m.field, m.film);
}

// Score the model, dirty imaging, and CLEAN against the true skies.  The
// reconstruction step is injectable so an oracle prediction can be scored
// through the identical metric path.
inline EvalSummary evaluate(const Model& model, const std::vector<TrainingSample>& samples, const DatasetMeta& meta,
                            const ReconstructFn& reconstruct_fn = default_reconstruct,
                            const CleanConfig& clean_cfg = {}) {
    if (samples.empty()) throw UsageError("evaluate: empty sample set");
    EvalSummary sum;
    for (const TrainingSample& s : samples) {
        EvalRow row;
        DenseVisibilityGrid grid = reconstruct_fn(model, s, meta);
        ComplexGrid pg = ComplexGrid::zeros(grid.n);
        pg.re = grid.re.data();
        pg.im = grid.im.data();
        const std::vector<double> img = ift_image(pg);
        row.psnr_model = psnr(s.sky.pixels, img, 1.0);
        row.ssim_model = ssim(s.sky.pixels, img, s.sky.n);

        const std::vector<double> dirty = dirty_image(s.vs);
        row.psnr_dirty = psnr(s.sky.pixels, dirty, 1.0);
        row.ssim_dirty = ssim(s.sky.pixels, dirty, s.sky.n);

        CleanResult cr = hogbom_clean(dirty, dirty_beam(s.vs), s.sky.n, clean_cfg);
        row.psnr_clean = psnr(s.sky.pixels, cr.restored, 1.0);
        row.ssim_clean = ssim(s.sky.pixels, cr.restored, s.sky.n);
        row.clean_iterations = cr.iterations;
        sum.rows.push_back(row);

        sum.mean_psnr_model += row.psnr_model;
        sum.mean_ssim_model += row.ssim_model;
        sum.mean_psnr_dirty += row.psnr_dirty;
        sum.mean_ssim_dirty += row.ssim_dirty;
        sum.mean_psnr_clean += row.psnr_clean;
        sum.mean_ssim_clean += row.ssim_clean;
    }
    const auto n = static_cast<double>(sum.rows.size());
    sum.mean_psnr_model /= n;
    sum.mean_ssim_model /= n;
    sum.mean_psnr_dirty /= n;
    sum.mean_ssim_dirty /= n;
    sum.mean_psnr_clean /= n;
    sum.mean_ssim_clean /= n;
    return sum;
}

// Checkpoint layout: one tensor dump per trainable parameter, named by group
// and index.  Loading requires an already-built model of the same dims and
// restores values in place.
namespace detail {

inline std::vector<std::pair<std::string, Tensor>> named_trainable(const TrainableSet& t) {
    std::vector<std::pair<std::string, Tensor>> out;
    auto push = [&](const char* group, const std::vector<Tensor>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(std::string(group) + "." + std::to_string(i), v[i]);
    };
    push("theta_c1", t.theta_c1);
    push("theta_c2", t.theta_c2);
    push("theta_v", t.theta_v);
    push("theta_r", t.theta_r);
    return out;
}

}  // namespace detail

inline void save_trainable(const std::string& dir, const TrainableSet& t) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, tensor] : detail::named_trainable(t))
        save_tensor(dir + "/" + name + ".vvtt", tensor);
}

inline void load_trainable(const std::string& dir, const TrainableSet& t) {
    for (const auto& [name, tensor] : detail::named_trainable(t)) {
        Tensor loaded = load_tensor(dir + "/" + name + ".vvtt");
        if (loaded.shape() != tensor.shape())
            throw ConfigError("load_trainable: " + name + " has shape " + shape_str(loaded.shape()) +
                              ", model expects " + shape_str(tensor.shape()));
        tensor.node()->value = loaded.data();
    }
}

}  // namespace uvrec
