#pragma once
#include <array>
#include <utility>

#include "uvrec/tensor.hpp"

namespace uvrec {

// Bilinear gridding: drop each sample's feature column onto the 4 cells
// nearest its (row, col) position, accumulate weighted values and weights,
// then divide by the accumulated weight where any landed (cell averaging).
// Positions at exact cell centers degenerate to a single cell.  Positions
// are data, not differentiable; gradients flow to the features.
inline Tensor scatter_bilinear(const Tensor& features, const std::vector<std::pair<double, double>>& pos,
                               std::size_t h, std::size_t w) {
    if (features.rank() != 2) throw ShapeError("scatter_bilinear: features must be [C x L], got " + shape_str(features.shape()));
    const std::size_t c = features.dim(0), l = features.dim(1);
    if (pos.size() != l) throw ShapeError("scatter_bilinear: " + std::to_string(pos.size()) + " positions for " + std::to_string(l) + " features");

    struct Hit {
        std::size_t cell;
        double weight;
    };
    auto hits = std::make_shared<std::vector<std::array<Hit, 4>>>(l);
    for (std::size_t s = 0; s < l; ++s) {
        const double r = pos[s].first, q = pos[s].second;
        if (r < 0.0 || q < 0.0 || r > static_cast<double>(h - 1) || q > static_cast<double>(w - 1))
            throw ShapeError("scatter_bilinear: position (" + std::to_string(r) + "," + std::to_string(q) + ") outside grid");
        const std::size_t r0 = static_cast<std::size_t>(r);
        const std::size_t q0 = static_cast<std::size_t>(q);
        const std::size_t r1 = std::min(r0 + 1, h - 1);
        const std::size_t q1 = std::min(q0 + 1, w - 1);
        const double fr = r - static_cast<double>(r0);
        const double fq = q - static_cast<double>(q0);
        (*hits)[s] = {Hit{r0 * w + q0, (1.0 - fr) * (1.0 - fq)}, Hit{r0 * w + q1, (1.0 - fr) * fq},
                      Hit{r1 * w + q0, fr * (1.0 - fq)}, Hit{r1 * w + q1, fr * fq}};
    }
    auto wsum = std::make_shared<std::vector<double>>(h * w, 0.0);
    for (const auto& hs : *hits)
        for (const auto& hit : hs) (*wsum)[hit.cell] += hit.weight;

    Tensor out = detail::make_result({c, h, w}, {features.node()}, [c, l, h, w, hits, wsum](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        const std::size_t plane = h * w;
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* dy = self.grad.data() + ch * plane;
            double* df = p.grad.data() + ch * l;
            for (std::size_t s = 0; s < l; ++s)
                for (const auto& hit : (*hits)[s])
                    if (hit.weight > 0.0) df[s] += dy[hit.cell] * hit.weight / (*wsum)[hit.cell];
        }
    });
    const std::size_t plane = h * w;
    for (std::size_t ch = 0; ch < c; ++ch) {
        double* yo = out.data().data() + ch * plane;
        const double* f = features.data().data() + ch * l;
        for (std::size_t s = 0; s < l; ++s)
            for (const auto& hit : (*hits)[s]) yo[hit.cell] += hit.weight * f[s];
        for (std::size_t i = 0; i < plane; ++i)
            if ((*wsum)[i] > 0.0) yo[i] /= (*wsum)[i];
    }
    return out;
}

// [C x H x W] -> [(H/P)(W/P) x C*P*P]: non-overlapping PxP patches in raster
// order, each flattened channel-major.  Differentiable (pure gather).
inline Tensor extract_patches(const Tensor& x, std::size_t p) {
    if (x.rank() != 3) throw ShapeError("extract_patches: input must be [C x H x W], got " + shape_str(x.shape()));
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (p == 0 || h % p != 0 || w % p != 0)
        throw ShapeError("extract_patches: " + std::to_string(h) + "x" + std::to_string(w) + " not divisible by patch " + std::to_string(p));
    const std::size_t gh = h / p, gw = w / p, rows = gh * gw, cols = c * p * p;
    Tensor out = detail::make_result({rows, cols}, {x.node()}, [c, h, w, p, gw, rows, cols](detail::Node& self) {
        auto& px = *self.parents[0];
        if (!px.requires_grad) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t py = (r / gw) * p, pxx = (r % gw) * p;
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t dy = 0; dy < p; ++dy)
                    for (std::size_t dx = 0; dx < p; ++dx)
                        px.grad[(ch * h + py + dy) * w + pxx + dx] += self.grad[r * cols + (ch * p + dy) * p + dx];
        }
    });
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t py = (r / gw) * p, pxx = (r % gw) * p;
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t dy = 0; dy < p; ++dy)
                for (std::size_t dx = 0; dx < p; ++dx)
                    out.at(r * cols + (ch * p + dy) * p + dx) = x.at((ch * h + py + dy) * w + pxx + dx);
    }
    return out;
}

// Replace entries where mask is set with the corresponding `values` entries.
// Gradient reaches x only through unmasked cells and values only through
// masked ones, which is what pins measurements in place during training.
inline Tensor mask_overwrite(const Tensor& x, const std::vector<std::uint8_t>& mask, const Tensor& values) {
    detail::check_same_shape(x, values, "mask_overwrite");
    if (mask.size() != x.size()) throw ShapeError("mask_overwrite: mask size " + std::to_string(mask.size()) + " != " + std::to_string(x.size()));
    auto m = std::make_shared<std::vector<std::uint8_t>>(mask);
    Tensor out = detail::make_result(x.shape(), {x.node(), values.node()}, [m](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pv = *self.parents[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if ((*m)[i]) {
                if (pv.requires_grad) pv.grad[i] += self.grad[i];
            } else {
                if (px.requires_grad) px.grad[i] += self.grad[i];
            }
        }
    });
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = mask[i] ? values.at(i) : x.at(i);
    return out;
}

// Conjugate-cell index for a centered-DC N x N grid: cell (r, c) holds
// frequency (r - N/2, c - N/2), so its mirror is ((N - r) % N, (N - c) % N).
inline std::size_t conjugate_cell(std::size_t r, std::size_t c, std::size_t n) {
    return ((n - r) % n) * n + ((n - c) % n);
}

// Average a square map with its frequency-mirrored copy: out(r,c) =
// (x(r,c) + sign * x(mirror)) / 2.  sign=+1 symmetrizes a real part,
// sign=-1 an imaginary part; together they project a centered complex grid
// onto Hermitian form.  Cells already satisfying the symmetry are preserved
// bitwise ((a + a)/2 == a in IEEE), and sign=-1 zeroes self-mirrored cells.
inline Tensor symmetrize_centered(const Tensor& x, double sign) {
    if (x.rank() != 2 || x.dim(0) != x.dim(1)) throw ShapeError("symmetrize_centered: expects square rank-2, got " + shape_str(x.shape()));
    const std::size_t n = x.dim(0);
    Tensor out = detail::make_result(x.shape(), {x.node()}, [n, sign](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double g = 0.5 * self.grad[r * n + c];
                p.grad[r * n + c] += g;
                p.grad[conjugate_cell(r, c, n)] += sign * g;
            }
    });
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            out.at(r * n + c) = 0.5 * (x.at(r * n + c) + sign * x.at(conjugate_cell(r, c, n)));
    return out;
}

}  // namespace uvrec
