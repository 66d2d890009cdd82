#pragma once
#include "uvrec/tensor.hpp"

namespace uvrec {

// 1-D cross-correlation with bias.  x is channel-major [C_in x L], weights
// [C_out x C_in x K], bias [C_out].  pad < 0 selects "same" padding (K/2),
// which keeps L' = L at stride 1 for odd K.
inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
                     std::size_t stride = 1, std::ptrdiff_t pad = -1) {
    if (x.rank() != 2) throw ShapeError("conv1d: input must be [C_in x L], got " + shape_str(x.shape()));
    if (w.rank() != 3) throw ShapeError("conv1d: weights must be [C_out x C_in x K], got " + shape_str(w.shape()));
    const std::size_t cin = x.dim(0), len = x.dim(1);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin) throw ShapeError("conv1d: weight C_in " + std::to_string(w.dim(1)) + " != input C_in " + std::to_string(cin));
    if (b.size() != cout) throw ShapeError("conv1d: bias size " + std::to_string(b.size()) + " != C_out " + std::to_string(cout));
    const std::size_t p = pad < 0 ? k / 2 : static_cast<std::size_t>(pad);
    if (len + 2 * p < k) throw ShapeError("conv1d: kernel " + std::to_string(k) + " exceeds padded length " + std::to_string(len + 2 * p));
    const std::size_t lout = (len + 2 * p - k) / stride + 1;

    Tensor out = detail::make_result({cout, lout}, {x.node(), w.node(), b.node()},
                                     [cin, len, cout, k, p, stride, lout](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        for (std::size_t o = 0; o < cout; ++o) {
            const double* dy = self.grad.data() + o * lout;
            if (pb.requires_grad) {
                double s = 0.0;
                for (std::size_t t = 0; t < lout; ++t) s += dy[t];
                pb.grad[o] += s;
            }
            for (std::size_t i = 0; i < cin; ++i) {
                const double* xi = px.value.data() + i * len;
                const double* wo = pw.value.data() + (o * cin + i) * k;
                double* dxi = px.requires_grad ? px.grad.data() + i * len : nullptr;
                double* dwo = pw.requires_grad ? pw.grad.data() + (o * cin + i) * k : nullptr;
                for (std::size_t t = 0; t < lout; ++t) {
                    const double g = dy[t];
                    if (g == 0.0) continue;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t * stride + kk) - static_cast<std::ptrdiff_t>(p);
                        if (s < 0 || s >= static_cast<std::ptrdiff_t>(len)) continue;
                        if (dwo) dwo[kk] += g * xi[s];
                        if (dxi) dxi[s] += g * wo[kk];
                    }
                }
            }
        }
    });
    for (std::size_t o = 0; o < cout; ++o) {
        double* yo = out.data().data() + o * lout;
        for (std::size_t t = 0; t < lout; ++t) yo[t] = b.at(o);
        for (std::size_t i = 0; i < cin; ++i) {
            const double* xi = x.data().data() + i * len;
            const double* wo = w.data().data() + (o * cin + i) * k;
            for (std::size_t t = 0; t < lout; ++t) {
                double s = 0.0;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + kk) - static_cast<std::ptrdiff_t>(p);
                    if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) s += wo[kk] * xi[src];
                }
                yo[t] += s;
            }
        }
    }
    return out;
}

// 2-D cross-correlation with bias: x [C_in x H x W], weights
// [C_out x C_in x Kh x Kw], bias [C_out]; stride 1, "same" zero padding.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 3) throw ShapeError("conv2d: input must be [C_in x H x W], got " + shape_str(x.shape()));
    if (w.rank() != 4) throw ShapeError("conv2d: weights must be [C_out x C_in x Kh x Kw], got " + shape_str(w.shape()));
    const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != cin) throw ShapeError("conv2d: weight C_in " + std::to_string(w.dim(1)) + " != input C_in " + std::to_string(cin));
    if (b.size() != cout) throw ShapeError("conv2d: bias size " + std::to_string(b.size()) + " != C_out " + std::to_string(cout));
    const std::size_t ph = kh / 2, pw2 = kw / 2;
    if (h + 2 * ph < kh || wd + 2 * pw2 < kw) throw ShapeError("conv2d: kernel exceeds padded input");

    Tensor out = detail::make_result({cout, h, wd}, {x.node(), w.node(), b.node()},
                                     [cin, h, wd, cout, kh, kw, ph, pw2](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pwn = *self.parents[1];
        auto& pb = *self.parents[2];
        const std::size_t plane = h * wd;
        for (std::size_t o = 0; o < cout; ++o) {
            const double* dy = self.grad.data() + o * plane;
            if (pb.requires_grad) {
                double s = 0.0;
                for (std::size_t t = 0; t < plane; ++t) s += dy[t];
                pb.grad[o] += s;
            }
            for (std::size_t i = 0; i < cin; ++i) {
                const double* xi = px.value.data() + i * plane;
                const double* wo = pwn.value.data() + ((o * cin + i) * kh) * kw;
                double* dxi = px.requires_grad ? px.grad.data() + i * plane : nullptr;
                double* dwo = pwn.requires_grad ? pwn.grad.data() + ((o * cin + i) * kh) * kw : nullptr;
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xatom = 0; xatom < wd; ++xatom) {
                        const double g = dy[y * wd + xatom];
                        if (g == 0.0) continue;
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(ph);
                            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xatom + kx) - static_cast<std::ptrdiff_t>(pw2);
                                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
                                const std::size_t src = static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx);
                                if (dwo) dwo[ky * kw + kx] += g * xi[src];
                                if (dxi) dxi[src] += g * wo[ky * kw + kx];
                            }
                        }
                    }
            }
        }
    });
    const std::size_t plane = h * wd;
    for (std::size_t o = 0; o < cout; ++o) {
        double* yo = out.data().data() + o * plane;
        for (std::size_t t = 0; t < plane; ++t) yo[t] = b.at(o);
        for (std::size_t i = 0; i < cin; ++i) {
            const double* xi = x.data().data() + i * plane;
            const double* wo = w.data().data() + ((o * cin + i) * kh) * kw;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t xatom = 0; xatom < wd; ++xatom) {
                    double s = 0.0;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(ph);
                        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xatom + kx) - static_cast<std::ptrdiff_t>(pw2);
                            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
                            s += wo[ky * kw + kx] * xi[static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx)];
                        }
                    }
                    yo[y * wd + xatom] += s;
                }
        }
    }
    return out;
}

}  // namespace uvrec
