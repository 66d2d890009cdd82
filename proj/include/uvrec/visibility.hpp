#pragma once
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

#include "uvrec/array.hpp"
#include "uvrec/fft.hpp"
#include "uvrec/rng.hpp"
#include "uvrec/sky.hpp"

namespace uvrec {

// One gridded measurement: continuous grid-unit (u,v), complex value, the
// per-component noise std that was applied, and the snapped cell.
struct UVSample {
    double u = 0.0, v = 0.0;
    double re = 0.0, im = 0.0;
    double sigma = 0.0;
    std::size_t row = 0, col = 0;
};

struct VisibilitySet {
    std::size_t n = 0;
    std::vector<UVSample> samples;
    std::vector<std::uint8_t> mask;  // Hermitian-symmetric by construction

    std::size_t cell(const UVSample& s) const { return s.row * n + s.col; }
};

// Dense noiseless spectrum of a sky — the reconstruction ground truth, exact
// in simulation.  A real image's spectrum is conjugate-symmetric up to FFT
// rounding; project it onto exact Hermitian form so mirrored cells agree
// bitwise (downstream data-consistency checks are bit-level).
inline ComplexGrid dense_visibility(const SkyImage& sky) {
    ComplexGrid g = ComplexGrid::zeros(sky.n);
    g.re = sky.pixels;
    ComplexGrid f = fft2_centered(g, false);
    const std::size_t n = sky.n;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t idx = r * n + c;
            const std::size_t conj = conjugate_index(r, c, n);
            if (conj == idx) {
                f.im[idx] = 0.0;
            } else if (conj > idx) {
                const double re = 0.5 * (f.re[idx] + f.re[conj]);
                const double im = 0.5 * (f.im[idx] - f.im[conj]);
                f.re[idx] = f.re[conj] = re;
                f.im[idx] = im;
                f.im[conj] = -im;
            }
        }
    return f;
}

// Read the sky's spectrum at the covered cells and add measurement noise:
// i.i.d. Gaussian of std noise_sigma * max|F| on each component, drawn once
// per conjugate pair so mirrored samples stay exactly conjugate (and
// self-mirrored cells stay exactly real).
inline VisibilitySet sample_visibility(const SkyImage& sky, const UVCoverage& cov, double noise_sigma, std::uint64_t seed) {
    if (sky.n != cov.n) throw ShapeError("sample_visibility: sky grid " + std::to_string(sky.n) + " != coverage grid " + std::to_string(cov.n));
    if (cov.points.empty()) throw UsageError("sample_visibility: empty coverage");
    if (noise_sigma < 0.0) throw ConfigError("sample_visibility: noise_sigma must be >= 0");

    const ComplexGrid f = dense_visibility(sky);
    const std::size_t n = sky.n;
    double fmax = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) fmax = std::max(fmax, std::hypot(f.re[i], f.im[i]));
    const double sigma = noise_sigma * fmax;

    VisibilitySet vs;
    vs.n = n;
    vs.mask = cov.mask;
    vs.samples.reserve(cov.points.size());
    Rng rng(seed);
    std::unordered_map<std::size_t, std::pair<double, double>> drawn;  // cell -> noisy value
    for (const auto& p : cov.points) {
        const std::size_t idx = p.row * n + p.col;
        const std::size_t conj = conjugate_index(p.row, p.col, n);
        UVSample s;
        s.u = p.u;
        s.v = p.v;
        s.row = p.row;
        s.col = p.col;
        s.sigma = sigma;
        if (auto it = drawn.find(conj); it != drawn.end() && conj != idx) {
            s.re = it->second.first;
            s.im = -it->second.second;
        } else if (conj == idx) {
            s.re = f.re[idx] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
            s.im = 0.0;
        } else {
            s.re = f.re[idx] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
            s.im = f.im[idx] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
        }
        drawn.emplace(idx, std::make_pair(s.re, s.im));
        vs.samples.push_back(s);
    }
    return vs;
}

// ---------------------------------------------------------------------------
// Persistence: CSV of samples plus a 0/1 mask dump.  %.17g round-trips
// doubles exactly, keeping dataset directories byte-stable across runs.
// ---------------------------------------------------------------------------

inline void save_visibility_csv(const std::string& path, const VisibilitySet& vs) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for write: " + path);
    std::fputs("u,v,re,im,sigma\n", f);
    for (const auto& s : vs.samples)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.u, s.v, s.re, s.im, s.sigma);
    std::fclose(f);
}

inline VisibilitySet load_visibility_csv(const std::string& path, std::size_t n) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open for read: " + path);
    VisibilitySet vs;
    vs.n = n;
    vs.mask.assign(n * n, 0);
    char line[512];
    if (!std::fgets(line, sizeof line, f) || std::string(line).rfind("u,v,re,im,sigma", 0) != 0) {
        std::fclose(f);
        throw IoError("missing visibility CSV header: " + path);
    }
    while (std::fgets(line, sizeof line, f)) {
        UVSample s;
        if (std::sscanf(line, "%lf,%lf,%lf,%lf,%lf", &s.u, &s.v, &s.re, &s.im, &s.sigma) != 5) {
            std::fclose(f);
            throw IoError("malformed visibility row: " + path);
        }
        s.row = static_cast<std::size_t>(std::lround(s.v) + static_cast<long>(n / 2));
        s.col = static_cast<std::size_t>(std::lround(s.u) + static_cast<long>(n / 2));
        if (s.row >= n || s.col >= n) {
            std::fclose(f);
            throw IoError("visibility sample outside grid: " + path);
        }
        vs.mask[s.row * n + s.col] = 1;
        vs.samples.push_back(s);
    }
    std::fclose(f);
    if (vs.samples.empty()) throw IoError("empty visibility CSV: " + path);
    return vs;
}

}  // namespace uvrec
