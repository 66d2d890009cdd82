#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "uvrec/fft.hpp"
#include "uvrec/visibility.hpp"

namespace uvrec {

// Centered inverse DFT producing a real map.  The imaginary residue is
// discarded only after checking it is numerically negligible, which it is
// exactly when the input grid is (near-)Hermitian.
inline std::vector<double> ift_image(const ComplexGrid& grid) {
    ComplexGrid img = fft2_centered(grid, true);
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t i = 0; i < img.re.size(); ++i) {
        max_re = std::max(max_re, std::abs(img.re[i]));
        max_im = std::max(max_im, std::abs(img.im[i]));
    }
    if (max_im > 1e-8 * std::max(max_re, 1e-300))
        throw DegenerateError("ift_image: non-negligible imaginary residue; grid is not Hermitian");
    return img.re;
}

inline ComplexGrid grid_from_samples(const VisibilitySet& vs) {
    ComplexGrid g = ComplexGrid::zeros(vs.n);
    for (const auto& s : vs.samples) {
        g.re[vs.cell(s)] = s.re;
        g.im[vs.cell(s)] = s.im;
    }
    return g;
}

// Inverse transform of the zero-filled measured spectrum.
inline std::vector<double> dirty_image(const VisibilitySet& vs) {
    if (vs.samples.empty()) throw UsageError("dirty_image: empty sample list");
    return ift_image(grid_from_samples(vs));
}

// Inverse transform of the sampling mask itself (the observation's PSF),
// normalized so the central pixel is exactly 1.
inline std::vector<double> dirty_beam(const VisibilitySet& vs) {
    if (vs.samples.empty()) throw UsageError("dirty_beam: empty sample list");
    ComplexGrid g = ComplexGrid::zeros(vs.n);
    for (std::size_t i = 0; i < g.re.size(); ++i) g.re[i] = vs.mask[i] ? 1.0 : 0.0;
    std::vector<double> beam = ift_image(g);
    const double peak = beam[(vs.n / 2) * vs.n + vs.n / 2];
    if (peak <= 0.0) throw UsageError("dirty_beam: mask transform has no central peak");
    for (auto& v : beam) v /= peak;
    return beam;
}

// Fraction of grid cells measured; the dirty image of a unit point source
// equals flux * coverage_fraction * (shifted dirty beam).
inline double coverage_fraction(const VisibilitySet& vs) {
    std::size_t c = 0;
    for (auto m : vs.mask) c += m;
    return static_cast<double>(c) / static_cast<double>(vs.n * vs.n);
}

struct CleanComponent {
    std::size_t row = 0, col = 0;
    double flux = 0.0;
};

// Quadratic-form exponent of the fitted restoring Gaussian:
// G(dr, dc) = exp(-(a*dc^2 + b*dc*dr + c*dr^2)).
struct BeamFit {
    double a = std::numbers::ln2, b = 0.0, c = std::numbers::ln2;  // FWHM 2 px fallback
};

struct CleanConfig {
    double gain = 0.1;
    std::size_t max_iter = 500;
    double threshold = 0.01;  // stop when residual peak <= threshold * initial peak
};

struct CleanResult {
    std::vector<CleanComponent> components;
    std::vector<double> residual;
    std::vector<double> restored;
    std::size_t iterations = 0;
    BeamFit beam_fit;
};

namespace detail {

// Elliptical-Gaussian fit to the dirty beam's main lobe: flood-fill the
// connected region >= half maximum around the center (sidelobes can also
// top 0.5 on sparse masks, hence connectivity), then least-squares on
// ln(beam) over that region.  Falls back to a narrow circular beam when the
// lobe is too small to constrain the fit (e.g. a delta beam).
inline BeamFit fit_beam_main_lobe(const std::vector<double>& beam, std::size_t n) {
    const std::size_t c0 = (n / 2) * n + n / 2;
    std::vector<std::uint8_t> in_lobe(n * n, 0);
    std::vector<std::size_t> stack{c0};
    in_lobe[c0] = 1;
    std::vector<std::size_t> lobe;
    while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        lobe.push_back(p);
        const std::size_t r = p / n, c = p % n;
        const std::size_t nb[4] = {(r > 0 ? r - 1 : r) * n + c, (r + 1 < n ? r + 1 : r) * n + c,
                                   r * n + (c > 0 ? c - 1 : c), r * n + (c + 1 < n ? c + 1 : c)};
        for (std::size_t q : nb)
            if (!in_lobe[q] && beam[q] >= 0.5) {
                in_lobe[q] = 1;
                stack.push_back(q);
            }
    }
    BeamFit fit;
    if (lobe.size() < 6) return fit;

    // solve min ||X p - y||, rows [1, -dc^2, -dc*dr, -dr^2], y = ln(beam)
    double ata[4][4] = {};
    double aty[4] = {};
    for (std::size_t p : lobe) {
        const double dr = static_cast<double>(p / n) - static_cast<double>(n / 2);
        const double dc = static_cast<double>(p % n) - static_cast<double>(n / 2);
        const double row[4] = {1.0, -dc * dc, -dc * dr, -dr * dr};
        const double y = std::log(std::max(beam[p], 1e-12));
        for (int i = 0; i < 4; ++i) {
            aty[i] += row[i] * y;
            for (int j = 0; j < 4; ++j) ata[i][j] += row[i] * row[j];
        }
    }
    // Gaussian elimination with partial pivoting on the 4x4 normal equations
    double m[4][5];
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) m[i][j] = ata[i][j];
        m[i][4] = aty[i];
    }
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-12) return fit;
        std::swap(m[col], m[piv]);
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int j = col; j < 5; ++j) m[r][j] -= f * m[col][j];
        }
    }
    const double a = m[1][4] / m[1][1], b = m[2][4] / m[2][2], c = m[3][4] / m[3][3];
    if (a <= 0.0 || c <= 0.0 || 4.0 * a * c - b * b <= 0.0) return fit;  // not an elliptical peak
    fit.a = a;
    fit.b = b;
    fit.c = c;
    return fit;
}

}  // namespace detail

// Iterative point-source deconvolution: find the residual's absolute peak,
// subtract a gain-scaled copy of the beam cyclically shifted there (exact
// for DFT-built dirty images, whose convolution is circular), and repeat.
// Components are restored with the fitted Gaussian and added back to the
// final residual.
inline CleanResult hogbom_clean(const std::vector<double>& dirty, const std::vector<double>& beam, std::size_t n,
                                const CleanConfig& cfg = {}) {
    if (dirty.size() != n * n || beam.size() != n * n) throw ShapeError("hogbom_clean: dirty/beam size mismatch");
    if (cfg.gain <= 0.0 || cfg.gain > 1.0) throw UsageError("hogbom_clean: gain must be in (0, 1]");
    bool beam_nonzero = false;
    for (double v : beam) beam_nonzero = beam_nonzero || v != 0.0;
    if (!beam_nonzero) throw UsageError("hogbom_clean: beam is identically zero");

    CleanResult res;
    res.residual = dirty;
    double init_peak = 0.0;
    for (double v : dirty) init_peak = std::max(init_peak, std::abs(v));

    const std::size_t half = n / 2;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        std::size_t peak_idx = 0;
        double peak_abs = 0.0;
        for (std::size_t i = 0; i < res.residual.size(); ++i)
            if (std::abs(res.residual[i]) > peak_abs) {
                peak_abs = std::abs(res.residual[i]);
                peak_idx = i;
            }
        if (peak_abs <= cfg.threshold * init_peak) break;
        const std::size_t pr = peak_idx / n, pc = peak_idx % n;
        const double flux = cfg.gain * res.residual[peak_idx];
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t br = (r + half + n - pr) % n;  // beam row for image row r
            for (std::size_t c = 0; c < n; ++c) res.residual[r * n + c] -= flux * beam[br * n + (c + half + n - pc) % n];
        }
        res.components.push_back({pr, pc, flux});
        res.iterations = it + 1;
    }

    res.beam_fit = detail::fit_beam_main_lobe(beam, n);
    res.restored = res.residual;
    for (const auto& comp : res.components)
        for (std::size_t r = 0; r < n; ++r) {
            const double dr = static_cast<double>((r + half + n - comp.row) % n) - static_cast<double>(half);
            for (std::size_t c = 0; c < n; ++c) {
                const double dc = static_cast<double>((c + half + n - comp.col) % n) - static_cast<double>(half);
                res.restored[r * n + c] +=
                    comp.flux * std::exp(-(res.beam_fit.a * dc * dc + res.beam_fit.b * dc * dr + res.beam_fit.c * dr * dr));
            }
        }
    return res;
}

}  // namespace uvrec
