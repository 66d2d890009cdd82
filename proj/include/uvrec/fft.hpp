#pragma once
#include <cmath>
#include <numbers>
#include <vector>

#include "uvrec/errors.hpp"

namespace uvrec {

// N x N complex grid in centered-DC convention: cell (r, c) holds frequency
// (r - N/2, c - N/2), DC at (N/2, N/2).
struct ComplexGrid {
    std::size_t n = 0;
    std::vector<double> re;
    std::vector<double> im;
    bool centered = true;

    static ComplexGrid zeros(std::size_t n) { return {n, std::vector<double>(n * n, 0.0), std::vector<double>(n * n, 0.0), true}; }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// Iterative radix-2 Cooley-Tukey on interleaved re/im arrays.  Forward uses
// e^{-2pi i}, no normalization; inverse uses e^{+2pi i} and no 1/N (callers
// normalize once for 2-D).
inline void fft_1d(double* re, double* im, std::size_t n, std::size_t stride, bool inverse) {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i * stride], re[j * stride]);
            std::swap(im[i * stride], im[j * stride]);
        }
    }
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sgn * 2.0 * std::numbers::pi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::size_t a = (i + j) * stride;
                const std::size_t b = (i + j + len / 2) * stride;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

// Swap quadrants so index N/2 moves to 0 (its own inverse for even N).
inline void shift_2d(std::vector<double>& a, std::size_t n) {
    const std::size_t h = n / 2;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < n; ++c) std::swap(a[r * n + c], a[((r + h) % n) * n + (c + h) % n]);
}

}  // namespace detail

// Centered 2-D DFT: forward maps a centered image to a centered spectrum via
// shift -> row/column FFTs -> shift, unnormalized.  The inverse applies 1/N^2
// so inverse(forward(x)) == x up to rounding.
inline ComplexGrid fft2_centered(const ComplexGrid& g, bool inverse) {
    const std::size_t n = g.n;
    if (!is_power_of_two(n)) throw ShapeError("fft2_centered: grid size " + std::to_string(n) + " is not a power of two");
    if (g.re.size() != n * n || g.im.size() != n * n) throw ShapeError("fft2_centered: buffer sizes do not match grid");
    ComplexGrid out = g;
    detail::shift_2d(out.re, n);
    detail::shift_2d(out.im, n);
    for (std::size_t r = 0; r < n; ++r) detail::fft_1d(out.re.data() + r * n, out.im.data() + r * n, n, 1, inverse);
    for (std::size_t c = 0; c < n; ++c) detail::fft_1d(out.re.data() + c, out.im.data() + c, n, n, inverse);
    detail::shift_2d(out.re, n);
    detail::shift_2d(out.im, n);
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n * n);
        for (auto& v : out.re) v *= s;
        for (auto& v : out.im) v *= s;
    }
    return out;
}

}  // namespace uvrec
