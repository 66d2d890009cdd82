#pragma once
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uvrec/errors.hpp"
#include "uvrec/reconstructor.hpp"

namespace uvrec {

// Flat experiment configuration: everything a run needs, serializable to a
// key=value file losslessly.  Unknown keys are hard errors so experiment
// typos cannot pass silently; every key can be overridden through the
// UVREC_<KEY> environment variable.
struct ExperimentConfig {
    // dataset generation
    std::size_t n = 64;
    std::string kinds = "points,blobs,spiral,ring,edge_disk";
    std::size_t train_count = 200, val_count = 20, test_count = 40;
    double noise_sigma = 0.05;
    std::string array = "eht8";
    std::size_t hour_angles = 12;
    std::string dataset_name = "synthetic-skies";
    std::string subject = "mixed synthetic sky morphologies";
    // model dims
    std::size_t d = 64, t_q = 16, t_t = 32, heads = 4, channels = 4, patch = 8;
    std::size_t c_mid = 4, k1 = 5, k2 = 3;
    std::size_t field_width = 64, field_depth = 5, field_freqs = 16;
    bool position_codes = true;
    std::string fusion_mode = "full";
    // optimization protocol
    std::size_t epochs = 10;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::uint64_t seed = 1;
    double train_fraction = 1.0;

    std::vector<std::string> kind_list() const {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (start <= kinds.size()) {
            std::size_t comma = kinds.find(',', start);
            if (comma == std::string::npos) comma = kinds.size();
            if (comma > start) out.push_back(kinds.substr(start, comma - start));
            start = comma + 1;
        }
        return out;
    }

    void validate() const {
        if (n < 16 || !is_power_of_two(n)) throw ConfigError("n must be a power of two >= 16");
        if (kind_list().empty()) throw ConfigError("kinds must name at least one morphology");
        if (train_count < 1) throw ConfigError("train_count must be >= 1");
        if (test_count < 1) throw ConfigError("test_count must be >= 1");
        if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
        if (array != "eht8") throw ConfigError("array must be 'eht8'");
        if (hour_angles < 1) throw ConfigError("hour_angles must be >= 1");
        if (heads == 0 || d % heads != 0) throw ConfigError("d must be divisible by heads");
        if (d % 4 != 0) throw ConfigError("d must be divisible by 4");
        if (field_depth < 2) throw ConfigError("field_depth must be >= 2");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (lr <= 0.0) throw ConfigError("lr must be > 0");
        if (train_fraction <= 0.0 || train_fraction > 1.0)
            throw ConfigError("train_fraction must lie in (0, 1]");
        bool known = false;
        for (const std::string& m : fusion_modes()) known = known || m == fusion_mode;
        if (!known) throw ConfigError("unknown fusion_mode '" + fusion_mode + "'");
    }

    ModelConfig model_config() const {
        ModelConfig mc;
        mc.n = n;
        mc.d = d;
        mc.heads = heads;
        mc.t_q = t_q;
        mc.t_t = t_t;
        mc.channels = channels;
        mc.patch = patch;
        mc.c_mid = c_mid;
        mc.k1 = k1;
        mc.k2 = k2;
        mc.field_width = field_width;
        mc.field_depth = field_depth;
        mc.field_freqs = field_freqs;
        mc.use_position_codes = position_codes;
        mc.fusion_mode = fusion_mode;
        return mc;
    }

    TrainConfig train_config() const {
        TrainConfig tc;
        tc.epochs = epochs;
        tc.adam = {lr, beta1, beta2, adam_eps};
        tc.seed = seed;
        tc.train_fraction = train_fraction;
        return tc;
    }

    DatasetMeta meta() const { return {dataset_name, subject}; }
};

namespace detail {

// Single definition of the key set: serialization order, parser dispatch and
// env overrides all derive from it.
template <typename Fn>
void for_each_config_key(ExperimentConfig& c, Fn&& fn) {
    fn("n", c.n);
    fn("kinds", c.kinds);
    fn("train_count", c.train_count);
    fn("val_count", c.val_count);
    fn("test_count", c.test_count);
    fn("noise_sigma", c.noise_sigma);
    fn("array", c.array);
    fn("hour_angles", c.hour_angles);
    fn("dataset_name", c.dataset_name);
    fn("subject", c.subject);
    fn("d", c.d);
    fn("t_q", c.t_q);
    fn("t_t", c.t_t);
    fn("heads", c.heads);
    fn("channels", c.channels);
    fn("patch", c.patch);
    fn("c_mid", c.c_mid);
    fn("k1", c.k1);
    fn("k2", c.k2);
    fn("field_width", c.field_width);
    fn("field_depth", c.field_depth);
    fn("field_freqs", c.field_freqs);
    fn("position_codes", c.position_codes);
    fn("fusion_mode", c.fusion_mode);
    fn("epochs", c.epochs);
    fn("lr", c.lr);
    fn("beta1", c.beta1);
    fn("beta2", c.beta2);
    fn("adam_eps", c.adam_eps);
    fn("seed", c.seed);
    fn("train_fraction", c.train_fraction);
}

inline std::string config_value_str(const std::size_t& v) { return std::to_string(v); }
inline std::string config_value_str(const bool& v) { return v ? "1" : "0"; }
inline std::string config_value_str(const std::string& v) { return v; }
inline std::string config_value_str(const double& v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void config_value_parse(const std::string& key, const std::string& s, std::size_t& v) {
    char* end = nullptr;
    v = std::strtoull(s.c_str(), &end, 10);
    if (end == nullptr || *end != '\0') throw ConfigError("key '" + key + "' wants an integer, got '" + s + "'");
}
inline void config_value_parse(const std::string& key, const std::string& s, bool& v) {
    if (s == "1" || s == "true")
        v = true;
    else if (s == "0" || s == "false")
        v = false;
    else
        throw ConfigError("key '" + key + "' wants a boolean, got '" + s + "'");
}
inline void config_value_parse(const std::string&, const std::string& s, std::string& v) { v = s; }
inline void config_value_parse(const std::string& key, const std::string& s, double& v) {
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (end == nullptr || *end != '\0') throw ConfigError("key '" + key + "' wants a number, got '" + s + "'");
}

}  // namespace detail

inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    detail::for_each_config_key(const_cast<ExperimentConfig&>(cfg), [&](const char* key, auto& field) {
        out += std::string(key) + "=" + detail::config_value_str(field) + "\n";
    });
    return out;
}

// Parse `key=value` lines ('#' comments and blank lines allowed).  Every key
// must be known; values must parse for their type.
inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + " is not key=value: '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        bool matched = false;
        detail::for_each_config_key(cfg, [&](const char* k, auto& field) {
            if (!matched && key == k) {
                detail::config_value_parse(key, value, field);
                matched = true;
            }
        });
        if (!matched) throw ConfigError("unknown key '" + key + "'");
    }
    return cfg;
}

// Environment overrides: UVREC_<KEY> (uppercased) replaces the value of
// <key> when set.
inline void apply_env_overrides(ExperimentConfig& cfg) {
    detail::for_each_config_key(cfg, [&](const char* key, auto& field) {
        std::string env = "UVREC_";
        for (const char* p = key; *p; ++p) env += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        if (const char* v = std::getenv(env.c_str())) detail::config_value_parse(key, v, field);
    });
}

inline ExperimentConfig load_config(const std::string& path, bool env_overrides = true) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    ExperimentConfig cfg = parse_config_text(ss.str());
    if (env_overrides) apply_env_overrides(cfg);
    cfg.validate();
    return cfg;
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = serialize_config(cfg);
    return fnv1a(s.data(), s.size());
}

inline std::string config_hash_hex(const ExperimentConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

}  // namespace uvrec
