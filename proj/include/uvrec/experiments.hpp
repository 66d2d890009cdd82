#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "uvrec/config.hpp"
#include "uvrec/dataset.hpp"
#include "uvrec/reconstructor.hpp"

namespace uvrec {

// ---- checkpoints -----------------------------------------------------------

// A checkpoint directory holds the trainable tensors plus a manifest carrying
// the full config, its hash, the model seed and the epoch count — enough to
// rebuild the model and verify compatibility.
inline void save_checkpoint(const std::string& dir, const Model& model, const ExperimentConfig& cfg,
                            std::uint64_t seed, std::size_t epochs_trained) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    TrainableSet set = model.trainable();
    save_trainable((fs::path(dir) / "params").string(), set);
    std::ofstream manifest(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!manifest) throw IoError("checkpoint: cannot write manifest in " + dir);
    manifest << serialize_config(cfg);
    manifest << "config_hash=" << config_hash_hex(cfg) << "\n";
    manifest << "model_seed=" << seed << "\n";
    manifest << "epochs_trained=" << epochs_trained << "\n";
}

struct LoadedCheckpoint {
    ExperimentConfig cfg;
    std::uint64_t seed = 0;
    std::size_t epochs_trained = 0;
    Model model;
};

inline LoadedCheckpoint load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream f(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open manifest in " + dir);
    std::string text, line, stored_hash;
    LoadedCheckpoint ck;
    while (std::getline(f, line)) {
        if (line.rfind("config_hash=", 0) == 0)
            stored_hash = line.substr(12);
        else if (line.rfind("model_seed=", 0) == 0)
            ck.seed = std::strtoull(line.c_str() + 11, nullptr, 10);
        else if (line.rfind("epochs_trained=", 0) == 0)
            ck.epochs_trained = std::strtoull(line.c_str() + 15, nullptr, 10);
        else
            text += line + "\n";
    }
    ck.cfg = parse_config_text(text);
    ck.cfg.validate();
    if (!stored_hash.empty() && stored_hash != config_hash_hex(ck.cfg))
        throw ConfigError("checkpoint: manifest hash mismatch in " + dir);
    ck.model = make_model(ck.cfg.model_config(), ck.seed);
    TrainableSet set = ck.model.trainable();
    load_trainable((fs::path(dir) / "params").string(), set);
    return ck;
}

// Datasets and checkpoints must agree on the grid before they can be combined.
inline void require_compatible(const ExperimentConfig& checkpoint_cfg, const ExperimentConfig& data_cfg) {
    if (checkpoint_cfg.n != data_cfg.n)
        throw ConfigError("checkpoint/config mismatch: field 'n' (checkpoint " + std::to_string(checkpoint_cfg.n) +
                          ", dataset " + std::to_string(data_cfg.n) + ")");
    if (checkpoint_cfg.hour_angles != data_cfg.hour_angles)
        throw ConfigError("checkpoint/config mismatch: field 'hour_angles' (checkpoint " +
                          std::to_string(checkpoint_cfg.hour_angles) + ", dataset " +
                          std::to_string(data_cfg.hour_angles) + ")");
}

// ---- multi-seed runs -------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    double psnr = 0.0, ssim = 0.0;
    double seconds_per_step = 0.0;
    std::vector<EpochMetrics> history;
};

struct ArmResult {
    std::string arm;
    double fraction = 1.0;
    std::vector<SeedRun> runs;
    double mean_psnr = 0.0, std_psnr = 0.0;
    double mean_ssim = 0.0, std_ssim = 0.0;
    double seconds_per_step = 0.0;
};

inline std::vector<std::uint64_t> seed_ladder(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = base + i;
    return seeds;
}

namespace detail {

inline void finalize_arm(ArmResult& r) {
    const double k = static_cast<double>(r.runs.size());
    for (const SeedRun& s : r.runs) {
        r.mean_psnr += s.psnr / k;
        r.mean_ssim += s.ssim / k;
        r.seconds_per_step += s.seconds_per_step / k;
    }
    for (const SeedRun& s : r.runs) {
        r.std_psnr += (s.psnr - r.mean_psnr) * (s.psnr - r.mean_psnr) / k;
        r.std_ssim += (s.ssim - r.mean_ssim) * (s.ssim - r.mean_ssim) / k;
    }
    r.std_psnr = std::sqrt(r.std_psnr);
    r.std_ssim = std::sqrt(r.std_ssim);
}

}  // namespace detail

// Train and score one arm over several seeds.  Each seed controls both model
// initialization and the training shuffle; evaluation always uses the full
// test split.
inline ArmResult run_arm(const ExperimentConfig& cfg, const Dataset& ds, const std::string& arm, double fraction,
                         const std::vector<std::uint64_t>& seeds) {
    ArmResult result;
    result.arm = arm;
    result.fraction = fraction;
    for (std::uint64_t seed : seeds) {
        ModelConfig mc = cfg.model_config();
        mc.fusion_mode = arm;
        Model model = make_model(mc, seed);
        TrainConfig tc = cfg.train_config();
        tc.seed = seed;
        tc.train_fraction = fraction;
        TrainResult tr = train(model, ds.train, ds.meta, tc);
        EvalSummary ev = evaluate(model, ds.test, ds.meta);
        SeedRun run;
        run.seed = seed;
        run.psnr = ev.mean_psnr_model;
        run.ssim = ev.mean_ssim_model;
        run.seconds_per_step = tr.seconds_per_step;
        run.history = tr.history;
        result.runs.push_back(std::move(run));
    }
    detail::finalize_arm(result);
    return result;
}

inline double pooled_std(double a, double b) { return std::sqrt(0.5 * (a * a + b * b)); }

// ---- ablation and data-efficiency sweeps ------------------------------------

struct AblationReport {
    std::vector<ArmResult> arms;     // one per fusion mode, fixed order
    std::uint64_t test_split_hash = 0;
    double mean_psnr_dirty = 0.0, mean_ssim_dirty = 0.0;
    double mean_psnr_clean = 0.0, mean_ssim_clean = 0.0;
};

inline AblationReport ablate(const ExperimentConfig& cfg, const Dataset& ds, std::size_t n_seeds = 3) {
    if (n_seeds < 3) throw ConfigError("ablate: need at least 3 seeds for comparative claims");
    AblationReport report;
    report.test_split_hash = split_hash(ds.test);
    const std::vector<std::uint64_t> seeds = seed_ladder(cfg.seed, n_seeds);
    for (const std::string& arm : fusion_modes()) report.arms.push_back(run_arm(cfg, ds, arm, cfg.train_fraction, seeds));
    // classical references on the same split (deterministic, seed-free)
    Model dummy = make_model(cfg.model_config(), cfg.seed);
    EvalSummary ev = evaluate(dummy, ds.test, ds.meta);
    report.mean_psnr_dirty = ev.mean_psnr_dirty;
    report.mean_ssim_dirty = ev.mean_ssim_dirty;
    report.mean_psnr_clean = ev.mean_psnr_clean;
    report.mean_ssim_clean = ev.mean_ssim_clean;
    return report;
}

struct SweepRow {
    double fraction = 0.0;
    ArmResult result;
};

inline std::vector<SweepRow> sweep_fraction(const ExperimentConfig& cfg, const Dataset& ds,
                                            std::vector<double> fractions, std::size_t n_seeds = 3) {
    if (fractions.empty()) throw ConfigError("sweep: need at least one fraction");
    std::sort(fractions.begin(), fractions.end());
    for (double f : fractions)
        if (f <= 0.0 || f > 1.0) throw ConfigError("sweep: fractions must lie in (0, 1]");
    const std::vector<std::uint64_t> seeds = seed_ladder(cfg.seed, n_seeds);
    std::vector<SweepRow> rows;
    for (double f : fractions) rows.push_back({f, run_arm(cfg, ds, cfg.fusion_mode, f, seeds)});
    return rows;
}

// ---- report emission --------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Timing stays out of the CSV so identical runs produce identical bytes;
// seconds-per-step is reported on the human-readable table instead.
inline void write_ablation_csv(const std::string& path, const AblationReport& report) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("ablate: cannot write " + path);
    f << "arm,mean_psnr,std_psnr,mean_ssim,std_ssim\n";
    for (const ArmResult& a : report.arms)
        f << a.arm << "," << detail::fmt17(a.mean_psnr) << "," << detail::fmt17(a.std_psnr) << ","
          << detail::fmt17(a.mean_ssim) << "," << detail::fmt17(a.std_ssim) << "\n";
    f << "dirty," << detail::fmt17(report.mean_psnr_dirty) << ",0," << detail::fmt17(report.mean_ssim_dirty)
      << ",0\n";
    f << "clean," << detail::fmt17(report.mean_psnr_clean) << ",0," << detail::fmt17(report.mean_ssim_clean)
      << ",0\n";
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("sweep: cannot write " + path);
    f << "fraction,mean_psnr,std_psnr,mean_ssim,std_ssim\n";
    for (const SweepRow& r : rows)
        f << detail::fmt17(r.fraction) << "," << detail::fmt17(r.result.mean_psnr) << ","
          << detail::fmt17(r.result.std_psnr) << "," << detail::fmt17(r.result.mean_ssim) << ","
          << detail::fmt17(r.result.std_ssim) << "\n";
}

inline void write_eval_csv(const std::string& path, const EvalSummary& ev) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("evaluate: cannot write " + path);
    f << "sample,psnr_model,ssim_model,psnr_dirty,ssim_dirty,psnr_clean,ssim_clean\n";
    for (std::size_t i = 0; i < ev.rows.size(); ++i) {
        const EvalRow& r = ev.rows[i];
        f << i << "," << detail::fmt17(r.psnr_model) << "," << detail::fmt17(r.ssim_model) << ","
          << detail::fmt17(r.psnr_dirty) << "," << detail::fmt17(r.ssim_dirty) << "," << detail::fmt17(r.psnr_clean)
          << "," << detail::fmt17(r.ssim_clean) << "\n";
    }
}

inline void write_clean_baseline_csv(const std::string& path, const EvalSummary& ev) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("clean-baseline: cannot write " + path);
    f << "sample,psnr_dirty,ssim_dirty,psnr_clean,ssim_clean,clean_iterations\n";
    for (std::size_t i = 0; i < ev.rows.size(); ++i) {
        const EvalRow& r = ev.rows[i];
        f << i << "," << detail::fmt17(r.psnr_dirty) << "," << detail::fmt17(r.ssim_dirty) << ","
          << detail::fmt17(r.psnr_clean) << "," << detail::fmt17(r.ssim_clean) << "," << r.clean_iterations << "\n";
    }
}

}  // namespace uvrec
