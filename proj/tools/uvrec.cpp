// Command-line driver: dataset simulation, training, evaluation, classical
// baselines, image export, ablation and data-efficiency sweeps.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uvrec/config.hpp"
#include "uvrec/dataset.hpp"
#include "uvrec/experiments.hpp"
#include "uvrec/png.hpp"
#include "uvrec/reconstructor.hpp"

namespace {

using namespace uvrec;

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<double> parse_fractions(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        const std::string tok = s.substr(start, comma - start);
        if (!tok.empty()) {
            char* end = nullptr;
            const double f = std::strtod(tok.c_str(), &end);
            if (end == nullptr || *end != '\0') throw ConfigError("bad fraction '" + tok + "'");
            out.push_back(f);
        }
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("no fractions given");
    return out;
}

const TrainingSample& pick_sample(const Dataset& ds, const std::string& split, std::size_t index) {
    const std::vector<TrainingSample>* samples = nullptr;
    if (split == "train")
        samples = &ds.train;
    else if (split == "val")
        samples = &ds.val;
    else if (split == "test")
        samples = &ds.test;
    else
        throw UsageError("unknown split '" + split + "' (want train, val or test)");
    if (index >= samples->size())
        throw UsageError("sample index " + std::to_string(index) + " out of range for split '" + split + "' of size " +
                         std::to_string(samples->size()));
    return (*samples)[index];
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = load_config(config_path);
    const Dataset ds = generate_dataset(cfg);
    save_dataset(out_dir, ds);
    const std::size_t total = ds.train.size() + ds.val.size() + ds.test.size();
    std::printf("simulate: wrote %zu samples (%zu train, %zu val, %zu test) to %s\n", total, ds.train.size(),
                ds.val.size(), ds.test.size(), out_dir.c_str());
    std::printf("config_hash=%s\n", config_hash_hex(cfg).c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& out_dir) {
    const ExperimentConfig cfg = load_config(config_path);
    const Dataset ds = load_dataset(data_dir);
    require_compatible(cfg, ds.cfg);
    Model model = make_model(cfg.model_config(), cfg.seed);
    const TrainableSet set = model.trainable();
    std::printf("parameters: %zu\n", set.count());
    TrainResult tr = train(model, ds.train, ds.meta, cfg.train_config());
    for (const EpochMetrics& em : tr.history)
        std::printf("epoch %zu loss=%s psnr=%s ssim=%s\n", em.epoch, g6(em.loss).c_str(), g6(em.psnr).c_str(),
                    g6(em.ssim).c_str());
    save_checkpoint(out_dir, model, cfg, cfg.seed, cfg.epochs);
    write_metrics_csv((std::filesystem::path(out_dir) / "metrics.csv").string(), tr.history);
    std::printf("train: checkpoint written to %s (seconds_per_step=%s)\n", out_dir.c_str(),
                g6(tr.seconds_per_step).c_str());
    return 0;
}

int cmd_evaluate(const std::string& ck_dir, const std::string& data_dir, const std::string& out_csv) {
    const LoadedCheckpoint ck = load_checkpoint(ck_dir);
    const Dataset ds = load_dataset(data_dir);
    require_compatible(ck.cfg, ds.cfg);
    const EvalSummary ev = evaluate(ck.model, ds.test, ds.meta);
    std::printf("method,mean_psnr,mean_ssim\n");
    std::printf("model,%s,%s\n", g6(ev.mean_psnr_model).c_str(), g6(ev.mean_ssim_model).c_str());
    std::printf("dirty,%s,%s\n", g6(ev.mean_psnr_dirty).c_str(), g6(ev.mean_ssim_dirty).c_str());
    std::printf("clean,%s,%s\n", g6(ev.mean_psnr_clean).c_str(), g6(ev.mean_ssim_clean).c_str());
    if (!out_csv.empty()) {
        write_eval_csv(out_csv, ev);
        std::printf("evaluate: per-sample scores written to %s\n", out_csv.c_str());
    }
    return 0;
}

int cmd_clean_baseline(const std::string& data_dir, const std::string& out_csv) {
    const Dataset ds = load_dataset(data_dir);
    if (ds.test.empty()) throw UsageError("dataset has no test samples");
    EvalSummary ev;
    for (const TrainingSample& s : ds.test) {
        EvalRow row;
        const std::vector<double> dirty = dirty_image(s.vs);
        row.psnr_dirty = psnr(s.sky.pixels, dirty, 1.0);
        row.ssim_dirty = ssim(s.sky.pixels, dirty, s.sky.n);
        const CleanResult cr = hogbom_clean(dirty, dirty_beam(s.vs), s.sky.n, CleanConfig{});
        row.psnr_clean = psnr(s.sky.pixels, cr.restored, 1.0);
        row.ssim_clean = ssim(s.sky.pixels, cr.restored, s.sky.n);
        row.clean_iterations = cr.iterations;
        ev.rows.push_back(row);
        ev.mean_psnr_dirty += row.psnr_dirty / static_cast<double>(ds.test.size());
        ev.mean_psnr_clean += row.psnr_clean / static_cast<double>(ds.test.size());
    }
    if (out_csv.empty()) {
        std::printf("sample,psnr_dirty,ssim_dirty,psnr_clean,ssim_clean,clean_iterations\n");
        for (std::size_t i = 0; i < ev.rows.size(); ++i) {
            const EvalRow& r = ev.rows[i];
            std::printf("%zu,%.17g,%.17g,%.17g,%.17g,%zu\n", i, r.psnr_dirty, r.ssim_dirty, r.psnr_clean, r.ssim_clean,
                        r.clean_iterations);
        }
    } else {
        write_clean_baseline_csv(out_csv, ev);
        std::printf("clean-baseline: %zu rows written to %s (mean dirty %s dB, mean clean %s dB)\n", ev.rows.size(),
                    out_csv.c_str(), g6(ev.mean_psnr_dirty).c_str(), g6(ev.mean_psnr_clean).c_str());
    }
    return 0;
}

int cmd_reconstruct(const std::string& ck_dir, const std::string& data_dir, const std::string& split,
                    std::size_t index, const std::string& out_png) {
    const LoadedCheckpoint ck = load_checkpoint(ck_dir);
    const Dataset ds = load_dataset(data_dir);
    require_compatible(ck.cfg, ds.cfg);
    const TrainingSample& s = pick_sample(ds, split, index);
    const Tensor eta = forward_eta(ck.model, s.vs, ds.meta);
    DenseVisibilityGrid grid = reconstruct(s.vs, eta, ck.model.field, ck.model.film);
    ComplexGrid g = ComplexGrid::zeros(grid.n);
    g.re = grid.re.data();
    g.im = grid.im.data();
    const std::vector<double> recon = ift_image(g);
    const std::vector<double> dirty = dirty_image(s.vs);
    // dirty | reconstruction | truth, each n-by-n, shared [0, 1] gray scale
    const PanelImage img = compose_panels({dirty, recon, s.sky.pixels}, s.sky.n);
    write_png_gray(out_png, img.values, img.width, img.height, 0.0, 1.0);
    std::printf("reconstruct: %s sample %zu -> %s (%zux%zu)\n", split.c_str(), index, out_png.c_str(), img.width,
                img.height);
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_dir, std::size_t n_seeds,
               const std::string& out_csv) {
    const ExperimentConfig cfg = load_config(config_path);
    const Dataset ds = load_dataset(data_dir);
    require_compatible(cfg, ds.cfg);
    const AblationReport report = ablate(cfg, ds, n_seeds);
    std::printf("test_split_hash=%016llx\n", static_cast<unsigned long long>(report.test_split_hash));
    std::printf("%-16s %12s %12s %12s %12s %10s\n", "arm", "mean_psnr", "std_psnr", "mean_ssim", "std_ssim", "s/iter");
    for (const ArmResult& a : report.arms)
        std::printf("%-16s %12.4f %12.4f %12.4f %12.4f %10.3f\n", a.arm.c_str(), a.mean_psnr, a.std_psnr, a.mean_ssim,
                    a.std_ssim, a.seconds_per_step);
    std::printf("%-16s %12.4f %12.4f %12.4f %12.4f %10s\n", "dirty", report.mean_psnr_dirty, 0.0,
                report.mean_ssim_dirty, 0.0, "-");
    std::printf("%-16s %12.4f %12.4f %12.4f %12.4f %10s\n", "clean", report.mean_psnr_clean, 0.0,
                report.mean_ssim_clean, 0.0, "-");
    if (!out_csv.empty()) {
        write_ablation_csv(out_csv, report);
        std::printf("ablate: report written to %s\n", out_csv.c_str());
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& data_dir, const std::string& fractions_arg,
              std::size_t n_seeds, const std::string& out_csv) {
    const ExperimentConfig cfg = load_config(config_path);
    const Dataset ds = load_dataset(data_dir);
    require_compatible(cfg, ds.cfg);
    const std::vector<SweepRow> rows = sweep_fraction(cfg, ds, parse_fractions(fractions_arg), n_seeds);
    std::printf("%-10s %12s %12s %12s %12s\n", "fraction", "mean_psnr", "std_psnr", "mean_ssim", "std_ssim");
    for (const SweepRow& r : rows)
        std::printf("%-10g %12.4f %12.4f %12.4f %12.4f\n", r.fraction, r.result.mean_psnr, r.result.std_psnr,
                    r.result.mean_ssim, r.result.std_ssim);
    if (!out_csv.empty()) {
        write_sweep_csv(out_csv, rows);
        std::printf("sweep-fraction: report written to %s\n", out_csv.c_str());
    }
    return 0;
}

int cmd_stats(const std::string& ck_dir, const std::string& data_dir, const std::string& split, std::size_t index) {
    const LoadedCheckpoint ck = load_checkpoint(ck_dir);
    const Dataset ds = load_dataset(data_dir);
    require_compatible(ck.cfg, ds.cfg);
    const TrainingSample& s = pick_sample(ds, split, index);
    const FusionTrace trace = forward_trace(ck.model, s.vs, ds.meta);
    const FeatureStats zs = feature_stats(trace.zeta);
    std::printf("feature,mean,std,entropy\n");
    std::printf("zeta,%.17g,%.17g,%.17g\n", zs.mean, zs.std, zs.entropy);
    if (trace.has_xi) {
        const FeatureStats xs = feature_stats(trace.xi);
        const FeatureStats es = feature_stats(trace.eta);
        std::printf("xi,%.17g,%.17g,%.17g\n", xs.mean, xs.std, xs.entropy);
        std::printf("eta,%.17g,%.17g,%.17g\n", es.mean, es.std, es.entropy);
        const double lo = std::min(zs.mean, xs.mean), hi = std::max(zs.mean, xs.mean);
        // observation, not an assertion: where the fused mean falls
        std::fprintf(stderr, "note: eta mean %s between zeta mean and xi mean\n",
                     (es.mean >= lo && es.mean <= hi) ? "lies" : "does not lie");
    } else {
        const FeatureStats es = feature_stats(trace.eta);
        std::printf("eta,%.17g,%.17g,%.17g\n", es.mean, es.std, es.entropy);
        std::fprintf(stderr, "note: arm '%s' builds no knowledge pool; xi row omitted\n",
                     ck.cfg.fusion_mode.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse uv-plane visibility reconstruction toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, ck_dir, out_csv, out_png;
    std::string split = "test";
    std::string fractions_arg = "0.1,0.25,0.5,1.0";
    std::size_t sample_index = 0, n_seeds = 3;

    CLI::App* sim = app.add_subcommand("simulate", "generate and persist a dataset");
    sim->add_option("--config", config_path, "experiment config file")->required();
    sim->add_option("--out", out_dir, "output dataset directory")->required();

    CLI::App* trn = app.add_subcommand("train", "train a model on a dataset");
    trn->add_option("--config", config_path, "experiment config file")->required();
    trn->add_option("--data", data_dir, "dataset directory")->required();
    trn->add_option("--out", out_dir, "checkpoint output directory")->required();

    CLI::App* ev = app.add_subcommand("evaluate", "score a checkpoint on the test split");
    ev->add_option("--checkpoint", ck_dir, "checkpoint directory")->required();
    ev->add_option("--data", data_dir, "dataset directory")->required();
    ev->add_option("--out", out_csv, "optional per-sample CSV path");

    CLI::App* cb = app.add_subcommand("clean-baseline", "dirty and CLEAN scores on the test split");
    cb->add_option("--data", data_dir, "dataset directory")->required();
    cb->add_option("--out", out_csv, "optional CSV path (default: stdout)");

    CLI::App* rec = app.add_subcommand("reconstruct", "export dirty|model|truth PNG panels for one sample");
    rec->add_option("--checkpoint", ck_dir, "checkpoint directory")->required();
    rec->add_option("--data", data_dir, "dataset directory")->required();
    rec->add_option("--sample", sample_index, "sample index")->required();
    rec->add_option("--split", split, "split to draw from (train|val|test)");
    rec->add_option("--out", out_png, "output PNG path")->required();

    CLI::App* abl = app.add_subcommand("ablate", "train and compare all fusion arms");
    abl->add_option("--config", config_path, "experiment config file")->required();
    abl->add_option("--data", data_dir, "dataset directory")->required();
    abl->add_option("--seeds", n_seeds, "number of seeds per arm (>= 3)");
    abl->add_option("--out", out_csv, "optional CSV path");

    CLI::App* swp = app.add_subcommand("sweep-fraction", "data-efficiency sweep over training fractions");
    swp->add_option("--config", config_path, "experiment config file")->required();
    swp->add_option("--data", data_dir, "dataset directory")->required();
    swp->add_option("--fractions", fractions_arg, "comma-separated fractions in (0, 1]");
    swp->add_option("--seeds", n_seeds, "number of seeds per fraction (>= 3)");
    swp->add_option("--out", out_csv, "optional CSV path");

    CLI::App* st = app.add_subcommand("stats", "feature statistics (zeta, xi, eta) for one sample");
    st->add_option("--checkpoint", ck_dir, "checkpoint directory")->required();
    st->add_option("--data", data_dir, "dataset directory")->required();
    st->add_option("--sample", sample_index, "sample index")->required();
    st->add_option("--split", split, "split to draw from (train|val|test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_dir);
        if (trn->parsed()) return cmd_train(config_path, data_dir, out_dir);
        if (ev->parsed()) return cmd_evaluate(ck_dir, data_dir, out_csv);
        if (cb->parsed()) return cmd_clean_baseline(data_dir, out_csv);
        if (rec->parsed()) return cmd_reconstruct(ck_dir, data_dir, split, sample_index, out_png);
        if (abl->parsed()) return cmd_ablate(config_path, data_dir, n_seeds, out_csv);
        if (swp->parsed()) return cmd_sweep(config_path, data_dir, fractions_arg, n_seeds, out_csv);
        if (st->parsed()) return cmd_stats(ck_dir, data_dir, split, sample_index);
        std::fprintf(stderr, "error: usage: no command given\n");
        return 2;
    } catch (const uvrec::ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
    } catch (const uvrec::ShapeError& e) {
        std::fprintf(stderr, "error: shape: %s\n", e.what());
    } catch (const uvrec::UsageError& e) {
        std::fprintf(stderr, "error: usage: %s\n", e.what());
    } catch (const uvrec::IoError& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
    } catch (const uvrec::DegenerateError& e) {
        std::fprintf(stderr, "error: degenerate: %s\n", e.what());
    } catch (const uvrec::Error& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
    }
    return 2;
}
