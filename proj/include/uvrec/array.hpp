#pragma once
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "uvrec/errors.hpp"
#include "uvrec/fft.hpp"

namespace uvrec {

// Interferometer geometry: Earth-fixed station positions observing one
// declination over a set of hour angles at a single wavelength.
struct ArrayConfig {
    std::vector<std::array<double, 3>> stations;  // ECEF-style XYZ, meters
    double declination = 0.0;                     // radians
    std::vector<double> hour_angles;              // radians, strictly increasing
    double wavelength = 1.0;                      // meters
};

inline void validate(const ArrayConfig& cfg) {
    if (cfg.stations.size() < 2) throw ConfigError("array: need at least 2 stations");
    if (cfg.hour_angles.empty()) throw ConfigError("array: hour_angles must be non-empty");
    for (std::size_t i = 1; i < cfg.hour_angles.size(); ++i)
        if (cfg.hour_angles[i] <= cfg.hour_angles[i - 1]) throw ConfigError("array: hour_angles must be strictly increasing");
    if (cfg.wavelength <= 0.0) throw ConfigError("array: wavelength must be positive");
}

// An 8-station array with order-of-magnitude real geometry (a VLBI-scale
// network spanning the globe), observing a southern source.  Hour angles
// sample [-pi/3, pi/3] uniformly.
inline ArrayConfig eht8_array(std::size_t n_hour_angles, double declination = -0.4, double wavelength = 0.0013) {
    if (n_hour_angles < 1) throw ConfigError("array: need at least 1 hour angle");
    ArrayConfig cfg;
    cfg.stations = {
        {2225061.0, -5440057.0, -2481681.0},   // Atacama plateau
        {2225039.0, -5441198.0, -2479303.0},   // Atacama single dish
        {-1828796.0, -5054407.0, 3427865.0},   // Arizona
        {-768713.0, -5988541.0, 2063276.0},    // central Mexico
        {-5464523.0, -2493147.0, 2150611.0},   // Mauna Kea (submm array)
        {0.0, 0.0, -6359552.0},                // South Pole
        {5088968.0, -301682.0, 3825012.0},     // Sierra Nevada, Spain
        {-5464585.0, -2493001.0, 2150654.0},   // Mauna Kea (single dish)
    };
    cfg.declination = declination;
    cfg.wavelength = wavelength;
    const double lo = -std::numbers::pi / 3.0, hi = std::numbers::pi / 3.0;
    cfg.hour_angles.resize(n_hour_angles);
    for (std::size_t i = 0; i < n_hour_angles; ++i)
        cfg.hour_angles[i] = n_hour_angles == 1 ? 0.0 : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_hour_angles - 1);
    return cfg;
}

// One gridded uv measurement location: continuous centered grid-unit
// coordinates (u along columns, v along rows) plus the snapped cell.
struct CoveragePoint {
    double u = 0.0, v = 0.0;
    std::size_t row = 0, col = 0;
};

struct UVCoverage {
    std::size_t n = 0;
    std::vector<std::uint8_t> mask;     // N*N, true at measured cells
    std::vector<CoveragePoint> points;  // one per masked cell, insertion order

    std::size_t cell(const CoveragePoint& p) const { return p.row * n + p.col; }
    double fraction() const {
        std::size_t c = 0;
        for (auto m : mask) c += m;
        return static_cast<double>(c) / static_cast<double>(n * n);
    }
};

inline std::size_t conjugate_index(std::size_t r, std::size_t c, std::size_t n) { return ((n - r) % n) * n + ((n - c) % n); }

// Project every baseline at every hour angle into the uv-plane, mirror each
// point (a real sky gives conjugate-symmetric measurements), scale so the
// extremes land just inside the grid, and keep one point per cell.
inline UVCoverage compute_uv_coverage(const ArrayConfig& cfg, std::size_t n) {
    validate(cfg);
    if (!is_power_of_two(n) || n < 16) throw ConfigError("coverage: grid size must be a power of two >= 16");

    struct RawPoint {
        double u, v;
    };
    std::vector<RawPoint> raw;
    raw.reserve(cfg.stations.size() * cfg.stations.size() * cfg.hour_angles.size());
    const double sd = std::sin(cfg.declination), cd = std::cos(cfg.declination);
    for (std::size_t a = 0; a < cfg.stations.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.stations.size(); ++b) {
            const double bx = cfg.stations[a][0] - cfg.stations[b][0];
            const double by = cfg.stations[a][1] - cfg.stations[b][1];
            const double bz = cfg.stations[a][2] - cfg.stations[b][2];
            for (double ha : cfg.hour_angles) {
                const double sh = std::sin(ha), ch = std::cos(ha);
                const double u = (bx * sh + by * ch) / cfg.wavelength;
                const double v = (-bx * ch * sd + by * sh * sd + bz * cd) / cfg.wavelength;
                raw.push_back({u, v});
            }
        }

    double extent = 0.0;
    for (const auto& p : raw) extent = std::max({extent, std::abs(p.u), std::abs(p.v)});
    if (extent <= 0.0) throw DegenerateError("coverage: all baselines project to the origin");
    const double scale = (static_cast<double>(n) / 2.0 - 1.0) / extent;

    UVCoverage cov;
    cov.n = n;
    cov.mask.assign(n * n, 0);
    auto add = [&](double u, double v) {
        const double ug = u * scale, vg = v * scale;
        const std::size_t row = static_cast<std::size_t>(std::lround(vg) + static_cast<long>(n / 2));
        const std::size_t col = static_cast<std::size_t>(std::lround(ug) + static_cast<long>(n / 2));
        const std::size_t idx = row * n + col;
        if (!cov.mask[idx]) {
            cov.mask[idx] = 1;
            cov.points.push_back({ug, vg, row, col});
        }
    };
    for (const auto& p : raw) {
        add(p.u, p.v);
        add(-p.u, -p.v);  // lround is odd-symmetric, so the pair lands on mirrored cells
    }
    return cov;
}

// Every cell measured, at exact cell centers — the degenerate complete-
// sampling case used by identity tests and dense ground truth.
inline UVCoverage full_coverage(std::size_t n) {
    if (!is_power_of_two(n)) throw ConfigError("coverage: grid size must be a power of two");
    UVCoverage cov;
    cov.n = n;
    cov.mask.assign(n * n, 1);
    cov.points.reserve(n * n);
    const double half = static_cast<double>(n) / 2.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            cov.points.push_back({static_cast<double>(c) - half, static_cast<double>(r) - half, r, c});
    return cov;
}

}  // namespace uvrec
