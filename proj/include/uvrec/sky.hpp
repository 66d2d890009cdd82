#pragma once
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "uvrec/errors.hpp"
#include "uvrec/fft.hpp"
#include "uvrec/rng.hpp"

namespace uvrec {

// Synthetic sky: N x N non-negative intensity map, peak-normalized to 1.
struct SkyImage {
    std::size_t n = 0;
    std::vector<double> pixels;
    double fov = 1e-4;  // radians; cosmetic, the pipeline works in grid units
    std::string label;

    double at(std::size_t r, std::size_t c) const { return pixels[r * n + c]; }
};

namespace detail {

inline Rng sky_rng(const std::string& kind, std::uint64_t seed) {
    return Rng(mix_seed(seed, fnv1a(kind.data(), kind.size())));
}

struct BlobParam {
    double row, col, sigma_r, sigma_c, amp;
};

// Blob parameters drawn on the same stream the renderer uses, exposed so a
// test can integrate the Gaussians analytically.  Margins keep every blob
// at least ~4 sigma inside the grid, so truncated mass is negligible.
inline std::vector<BlobParam> blob_params(std::size_t n, std::uint64_t seed) {
    Rng rng = sky_rng("blobs", seed);
    const double margin = static_cast<double>(n) / 4.0;
    const double smin = std::max(1.5, static_cast<double>(n) / 32.0);
    const double smax = static_cast<double>(n) / 16.0;
    const std::size_t k = rng.uniform_int(2, 5);
    std::vector<BlobParam> out(k);
    for (auto& b : out) {
        b.row = rng.uniform(margin, static_cast<double>(n) - 1.0 - margin);
        b.col = rng.uniform(margin, static_cast<double>(n) - 1.0 - margin);
        b.sigma_r = rng.uniform(smin, smax);
        b.sigma_c = rng.uniform(smin, smax);
        b.amp = rng.uniform(0.3, 1.0);
    }
    return out;
}

}  // namespace detail

// Seeded synthetic sky of one of five morphologies.  Every kind returns a
// non-negative map whose maximum pixel is exactly 1.0.
inline SkyImage make_synthetic_sky(const std::string& kind, std::size_t n, std::uint64_t seed) {
    if (!is_power_of_two(n) || n < 16) throw UsageError("make_synthetic_sky: grid size must be a power of two >= 16");
    SkyImage sky;
    sky.n = n;
    sky.label = kind;
    sky.pixels.assign(n * n, 0.0);
    const double ctr = static_cast<double>(n) / 2.0;
    Rng rng = detail::sky_rng(kind, seed);

    if (kind == "points") {
        const std::size_t count = rng.uniform_int(1, 5);
        const std::size_t margin = n / 8;
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t r = rng.uniform_int(margin, n - 1 - margin);
            const std::size_t c = rng.uniform_int(margin, n - 1 - margin);
            sky.pixels[r * n + c] += rng.uniform(0.3, 1.0);
        }
    } else if (kind == "blobs") {
        for (const auto& b : detail::blob_params(n, seed))
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) {
                    const double dr = (static_cast<double>(r) - b.row) / b.sigma_r;
                    const double dc = (static_cast<double>(c) - b.col) / b.sigma_c;
                    sky.pixels[r * n + c] += b.amp * std::exp(-0.5 * (dr * dr + dc * dc));
                }
    } else if (kind == "spiral") {
        const double pitch = rng.uniform(0.2, 0.35);         // log-spiral pitch parameter
        const double rot = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double width = rng.uniform(1.0, 2.0);          // arm cross-section, pixels
        const double a0 = static_cast<double>(n) / 20.0;     // radius where the arm starts
        const double env = static_cast<double>(n) / 5.0;     // Gaussian envelope scale
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double dy = static_cast<double>(r) - ctr;
                const double dx = static_cast<double>(c) - ctr;
                const double rad = std::hypot(dx, dy);
                if (rad < 1.0) continue;
                const double theta = std::atan2(dy, dx);
                const double arm_angle = std::log(rad / a0) / pitch + rot;
                double v = 0.0;
                for (int arm = 0; arm < 2; ++arm) {
                    double delta = theta - arm_angle - static_cast<double>(arm) * std::numbers::pi;
                    delta = std::remainder(delta, 2.0 * std::numbers::pi);
                    const double d = std::abs(delta) * rad;  // arc distance to the arm ridge
                    v += std::exp(-0.5 * (d / width) * (d / width));
                }
                sky.pixels[r * n + c] = v * std::exp(-0.5 * (rad / env) * (rad / env));
            }
    } else if (kind == "ring") {
        const double r0 = rng.uniform(static_cast<double>(n) / 8.0, static_cast<double>(n) / 5.0);
        const double width = rng.uniform(static_cast<double>(n) / 16.0, static_cast<double>(n) / 8.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double rad = std::hypot(static_cast<double>(c) - ctr, static_cast<double>(r) - ctr);
                if (rad >= r0 && rad <= r0 + width)
                    sky.pixels[r * n + c] = std::sin(std::numbers::pi * (rad - r0) / width);
            }
    } else if (kind == "edge_disk") {
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double h_major = rng.uniform(static_cast<double>(n) / 8.0, static_cast<double>(n) / 5.0);
        const double h_minor = h_major * rng.uniform(0.15, 0.3);
        const double cphi = std::cos(phi), sphi = std::sin(phi);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double dy = static_cast<double>(r) - ctr;
                const double dx = static_cast<double>(c) - ctr;
                const double xp = (cphi * dx + sphi * dy) / h_major;
                const double yp = (-sphi * dx + cphi * dy) / h_minor;
                sky.pixels[r * n + c] = std::exp(-std::hypot(xp, yp));
            }
    } else {
        throw UsageError("make_synthetic_sky: unknown morphology '" + kind + "'");
    }

    double peak = 0.0;
    for (double p : sky.pixels) peak = std::max(peak, p);
    if (peak <= 0.0) throw DegenerateError("make_synthetic_sky: rendered an empty sky");
    for (auto& p : sky.pixels) p /= peak;
    return sky;
}

inline const std::vector<std::string>& sky_kinds() {
    static const std::vector<std::string> kinds{"points", "blobs", "spiral", "ring", "edge_disk"};
    return kinds;
}

}  // namespace uvrec
