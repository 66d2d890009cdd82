#pragma once
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uvrec/config.hpp"
#include "uvrec/png.hpp"
#include "uvrec/reconstructor.hpp"

namespace uvrec {

struct Dataset {
    ExperimentConfig cfg;
    DatasetMeta meta;
    UVCoverage coverage;
    std::vector<TrainingSample> train, val, test;
};

namespace detail {

// Stable per-sample seed ladder: split gets a namespace, index selects within.
inline std::uint64_t sample_seed(std::uint64_t base, std::uint64_t split_ns, std::size_t index) {
    return mix_seed(mix_seed(base, split_ns), static_cast<std::uint64_t>(index));
}

inline TrainingSample make_sample(const ExperimentConfig& cfg, const std::vector<std::string>& kinds,
                                  const UVCoverage& cov, std::uint64_t split_ns, std::size_t index) {
    const std::string& kind = kinds[index % kinds.size()];
    const std::uint64_t seed = sample_seed(cfg.seed, split_ns, index);
    TrainingSample s;
    s.sky = make_synthetic_sky(kind, cfg.n, seed);
    s.vs = sample_visibility(s.sky, cov, cfg.noise_sigma, mix_seed(seed, 0x76697369ULL));
    s.truth = dense_visibility(s.sky);
    return s;
}

constexpr std::uint64_t kTrainNs = 0x747261696eULL;
constexpr std::uint64_t kValNs = 0x76616cULL;
constexpr std::uint64_t kTestNs = 0x74657374ULL;

}  // namespace detail

inline Dataset generate_dataset(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.cfg = cfg;
    ds.meta = cfg.meta();
    ds.coverage = compute_uv_coverage(eht8_array(cfg.hour_angles), cfg.n);
    const std::vector<std::string> kinds = cfg.kind_list();
    for (std::size_t i = 0; i < cfg.train_count; ++i)
        ds.train.push_back(detail::make_sample(cfg, kinds, ds.coverage, detail::kTrainNs, i));
    for (std::size_t i = 0; i < cfg.val_count; ++i)
        ds.val.push_back(detail::make_sample(cfg, kinds, ds.coverage, detail::kValNs, i));
    for (std::size_t i = 0; i < cfg.test_count; ++i)
        ds.test.push_back(detail::make_sample(cfg, kinds, ds.coverage, detail::kTestNs, i));
    return ds;
}

namespace detail {

inline std::string sample_dir_name(const char* split, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03zu", split, index);
    return buf;
}

inline void save_sample(const std::filesystem::path& dir, const TrainingSample& s) {
    std::filesystem::create_directories(dir);
    const std::size_t n = s.sky.n;
    Tensor pix = Tensor::from_data({n, n}, s.sky.pixels);
    save_tensor((dir / "sky.vvtt").string(), pix);
    write_png_gray((dir / "sky.png").string(), s.sky.pixels, n, n, 0.0, 1.0);
    std::ofstream label(dir / "label.txt", std::ios::binary);
    label << s.sky.label << "\n";
    save_visibility_csv((dir / "vis.csv").string(), s.vs);
}

inline TrainingSample load_sample(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
    TrainingSample s;
    Tensor pix = load_tensor((dir / "sky.vvtt").string());
    if (pix.rank() != 2 || pix.dim(0) != cfg.n || pix.dim(1) != cfg.n)
        throw ConfigError("dataset: sky tensor in " + dir.string() + " does not match config n");
    s.sky.n = cfg.n;
    s.sky.pixels = pix.data();
    std::ifstream label(dir / "label.txt", std::ios::binary);
    if (label) std::getline(label, s.sky.label);
    s.vs = load_visibility_csv((dir / "vis.csv").string(), cfg.n);
    s.truth = dense_visibility(s.sky);
    return s;
}

}  // namespace detail

// Layout: <dir>/manifest.txt plus one subdirectory per sample named
// <split>_<index> holding sky.vvtt, sky.png, label.txt and vis.csv.  The
// manifest is the serialized config followed by its hash, so a run is fully
// reproducible from the manifest alone.
inline void save_dataset(const std::string& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!manifest) throw IoError("dataset: cannot write manifest in " + dir);
    manifest << serialize_config(ds.cfg);
    manifest << "config_hash=" << config_hash_hex(ds.cfg) << "\n";
    manifest.close();
    for (std::size_t i = 0; i < ds.train.size(); ++i)
        detail::save_sample(fs::path(dir) / detail::sample_dir_name("train", i), ds.train[i]);
    for (std::size_t i = 0; i < ds.val.size(); ++i)
        detail::save_sample(fs::path(dir) / detail::sample_dir_name("val", i), ds.val[i]);
    for (std::size_t i = 0; i < ds.test.size(); ++i)
        detail::save_sample(fs::path(dir) / detail::sample_dir_name("test", i), ds.test[i]);
}

inline ExperimentConfig load_manifest(const std::string& dir) {
    std::ifstream f(std::filesystem::path(dir) / "manifest.txt", std::ios::binary);
    if (!f) throw IoError("dataset: cannot open manifest in " + dir);
    std::string text, line, stored_hash;
    while (std::getline(f, line)) {
        if (line.rfind("config_hash=", 0) == 0)
            stored_hash = line.substr(12);
        else
            text += line + "\n";
    }
    ExperimentConfig cfg = parse_config_text(text);
    cfg.validate();
    if (!stored_hash.empty() && stored_hash != config_hash_hex(cfg))
        throw ConfigError("dataset: manifest hash mismatch in " + dir);
    return cfg;
}

inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.cfg = load_manifest(dir);
    ds.meta = ds.cfg.meta();
    ds.coverage = compute_uv_coverage(eht8_array(ds.cfg.hour_angles), ds.cfg.n);
    for (std::size_t i = 0; i < ds.cfg.train_count; ++i)
        ds.train.push_back(detail::load_sample(fs::path(dir) / detail::sample_dir_name("train", i), ds.cfg));
    for (std::size_t i = 0; i < ds.cfg.val_count; ++i)
        ds.val.push_back(detail::load_sample(fs::path(dir) / detail::sample_dir_name("val", i), ds.cfg));
    for (std::size_t i = 0; i < ds.cfg.test_count; ++i)
        ds.test.push_back(detail::load_sample(fs::path(dir) / detail::sample_dir_name("test", i), ds.cfg));
    return ds;
}

// Hash of the held-out split contents; comparative runs must agree on it.
inline std::uint64_t split_hash(const std::vector<TrainingSample>& samples) {
    std::uint64_t h = fnv1a("split", 5);
    for (const TrainingSample& s : samples) {
        h = fnv1a(s.sky.pixels.data(), s.sky.pixels.size() * sizeof(double), h);
        for (const UVSample& v : s.vs.samples) {
            const double vals[4] = {v.u, v.v, v.re, v.im};
            h = fnv1a(vals, sizeof(vals), h);
        }
    }
    return h;
}

}  // namespace uvrec
