#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

#include "uvrec/errors.hpp"

namespace uvrec {

// Geometric sin/cos ladder (transformer convention): pair k of the output is
// (sin(f_k x), cos(f_k x)) with f_k = base^(-2k/d).  Shared by the visual
// position codes, the textual value embedding, and the field's coordinate
// encoding so all modalities speak the same basis.
inline std::vector<double> sinusoid_code(double x, std::size_t d, double base = 10000.0) {
    if (d == 0 || d % 2 != 0) throw UsageError("sinusoid_code: dim must be even and nonzero");
    std::vector<double> out(d);
    for (std::size_t k = 0; 2 * k < d; ++k) {
        const double f = std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(d));
        out[2 * k] = std::sin(f * x);
        out[2 * k + 1] = std::cos(f * x);
    }
    return out;
}

// 2-D position code: first half encodes the row, second half the column.
inline std::vector<double> position_code_2d(double row, double col, std::size_t d) {
    if (d % 4 != 0) throw UsageError("position_code_2d: dim must be divisible by 4");
    std::vector<double> out(d);
    const std::vector<double> r = sinusoid_code(row, d / 2);
    const std::vector<double> c = sinusoid_code(col, d / 2);
    std::copy(r.begin(), r.end(), out.begin());
    std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>(d / 2));
    return out;
}

}  // namespace uvrec
