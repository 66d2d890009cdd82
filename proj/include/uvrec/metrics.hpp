#pragma once
#include <cmath>
#include <vector>

#include "uvrec/errors.hpp"

namespace uvrec {

// Peak signal-to-noise ratio in dB, capped at 100 dB so identity
// comparisons stay finite.
inline double psnr(const std::vector<double>& a, const std::vector<double>& b, double peak) {
    if (a.size() != b.size()) throw ShapeError("psnr: size mismatch");
    if (a.empty()) throw ShapeError("psnr: empty maps");
    if (peak <= 0.0) throw UsageError("psnr: peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
    mse /= static_cast<double>(a.size());
    if (mse < peak * peak * 1e-10) return 100.0;
    return 10.0 * std::log10(peak * peak / mse);
}

// Mean structural similarity over non-overlapping 8x8 windows with the
// standard stabilizers C1 = (0.01 peak)^2, C2 = (0.03 peak)^2.
inline double ssim(const std::vector<double>& a, const std::vector<double>& b, std::size_t n, double peak = 1.0) {
    if (a.size() != n * n || b.size() != n * n) throw ShapeError("ssim: maps must be n x n");
    if (peak <= 0.0) throw UsageError("ssim: peak must be positive");
    constexpr std::size_t win = 8;
    if (n % win != 0) throw ShapeError("ssim: grid size must be a multiple of 8");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t wr = 0; wr < n; wr += win)
        for (std::size_t wc = 0; wc < n; wc += win) {
            double ma = 0.0, mb = 0.0;
            for (std::size_t r = 0; r < win; ++r)
                for (std::size_t c = 0; c < win; ++c) {
                    ma += a[(wr + r) * n + wc + c];
                    mb += b[(wr + r) * n + wc + c];
                }
            const double inv = 1.0 / static_cast<double>(win * win);
            ma *= inv;
            mb *= inv;
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (std::size_t r = 0; r < win; ++r)
                for (std::size_t c = 0; c < win; ++c) {
                    const double da = a[(wr + r) * n + wc + c] - ma;
                    const double db = b[(wr + r) * n + wc + c] - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            va *= inv;
            vb *= inv;
            cov *= inv;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return total / static_cast<double>(count);
}

}  // namespace uvrec
