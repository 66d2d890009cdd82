#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "uvrec/errors.hpp"
#include "uvrec/rng.hpp"

namespace uvrec {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string r = "[";
    for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "x" : "") + std::to_string(s[i]);
    return r + "]";
}

namespace detail {

// One recorded value on the gradient tape.  Creation order (`seq`) is a
// topological order of the graph: every op consumes already-created nodes,
// so walking reachable nodes by decreasing seq visits each exactly once in
// reverse topological order.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::uint64_t seq = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // pulls self.grad into parents' grads
};

inline std::uint64_t next_seq() {
    thread_local std::uint64_t counter = 0;  // a tape is confined to one thread
    return ++counter;
}

inline std::shared_ptr<Node> make_node(Shape shape) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value.assign(numel(n->shape), 0.0);
    n->seq = next_seq();
    return n;
}

}  // namespace detail

// Dense 64-bit float tensor with reverse-mode gradient recording.  Value
// semantics with shared storage: copies alias the same node, which is what
// lets parameter tensors accumulate gradients across the graph.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        auto n = detail::make_node(std::move(shape));
        if (requires_grad) {
            n->requires_grad = true;
            n->grad.assign(n->value.size(), 0.0);
        }
        return Tensor(n);
    }

    static Tensor full(Shape shape, double v, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        std::fill(t.data().begin(), t.data().end(), v);
        return t;
    }

    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (numel(shape) != data.size())
            throw ShapeError("from_data: " + std::to_string(data.size()) + " values for shape " + shape_str(shape));
        Tensor t = zeros(std::move(shape), requires_grad);
        t.node_->value = std::move(data);
        return t;
    }

    static Tensor scalar(double v, bool requires_grad = false) { return full({1}, v, requires_grad); }

    // Seeded uniform init in [lo, hi); the standard weight init is
    // uniform(+-sqrt(1/fan_in)) with zero biases.
    static Tensor uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        for (auto& v : t.data()) v = rng.uniform(lo, hi);
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    double& at(std::size_t i) { return node_->value[i]; }
    double at(std::size_t i) const { return node_->value[i]; }
    double& at(std::size_t i, std::size_t j) { return node_->value[i * node_->shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return node_->value[i * node_->shape[1] + j]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg) {
        node_->requires_grad = rg;
        if (rg)
            node_->grad.assign(node_->value.size(), 0.0);
        else
            node_->grad.clear();
    }

    const std::vector<double>& grad() const {
        if (!node_->requires_grad) throw UsageError("grad(): tensor does not participate in gradients");
        return node_->grad;
    }
    std::vector<double>& grad() {
        if (!node_->requires_grad) throw UsageError("grad(): tensor does not participate in gradients");
        return node_->grad;
    }
    void zero_grad() {
        if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }

    // Value copy cut loose from the tape.
    Tensor detached() const {
        Tensor t = zeros(node_->shape);
        t.node_->value = node_->value;
        return t;
    }

    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

namespace detail {

inline Tensor make_result(Shape shape, std::vector<std::shared_ptr<Node>> parents,
                          std::function<void(Node&)> backprop) {
    auto n = make_node(std::move(shape));
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    if (rg) {
        n->requires_grad = true;
        n->grad.assign(n->value.size(), 0.0);
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return Tensor(n);
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "add");
    Tensor out = detail::make_result(a.shape(), {a.node(), b.node()}, [](detail::Node& self) {
        for (int k = 0; k < 2; ++k) {
            auto& p = *self.parents[k];
            if (!p.requires_grad) continue;
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
        }
    });
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = a.at(i) + b.at(i);
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "sub");
    Tensor out = detail::make_result(a.shape(), {a.node(), b.node()}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    });
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = a.at(i) - b.at(i);
    return out;
}

// Elementwise product (the Hadamard product).
inline Tensor hadamard(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "hadamard");
    Tensor out = detail::make_result(a.shape(), {a.node(), b.node()}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    });
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = a.at(i) * b.at(i);
    return out;
}

inline Tensor scale(const Tensor& a, double c) {
    Tensor out = detail::make_result(a.shape(), {a.node()}, [c](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += c * self.grad[i];
    });
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = c * a.at(i);
    return out;
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

inline Tensor relu(const Tensor& a) {
    Tensor out = detail::make_result(a.shape(), {a.node()}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
    });
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = a.at(i) > 0.0 ? a.at(i) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Matrix ops (rank-2)
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: expects rank-2 operands, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k)
        throw ShapeError("matmul: inner dims " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    Tensor out = detail::make_result({m, n}, {a.node(), b.node()}, [m, k, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const double* A = pa.value.data();
        const double* B = pb.value.data();
        const double* dC = self.grad.data();
        if (pa.requires_grad) {  // dA = dC * B^T
            double* dA = pa.grad.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* dCi = dC + i * n;
                    const double* Bp = B + p * n;
                    for (std::size_t j = 0; j < n; ++j) s += dCi[j] * Bp[j];
                    dA[i * k + p] += s;
                }
        }
        if (pb.requires_grad) {  // dB = A^T * dC
            double* dB = pb.grad.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = A[i * k + p];
                    if (aip == 0.0) continue;
                    const double* dCi = dC + i * n;
                    double* dBp = dB + p * n;
                    for (std::size_t j = 0; j < n; ++j) dBp[j] += aip * dCi[j];
                }
        }
    });
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* Ci = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            const double* Bp = B + p * n;
            for (std::size_t j = 0; j < n; ++j) Ci[j] += aip * Bp[j];
        }
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: expects rank-2, got " + shape_str(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = detail::make_result({n, m}, {a.node()}, [m, n](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += self.grad[j * m + i];
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

// Row-stable softmax; each output row is a distribution.
inline Tensor softmax_rows(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("softmax_rows: expects rank-2, got " + shape_str(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = detail::make_result(a.shape(), {a.node()}, [m, n](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < m; ++i) {
            const double* y = self.value.data() + i * n;
            const double* dy = self.grad.data() + i * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
            double* dx = p.grad.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - dot);
        }
    });
    for (std::size_t i = 0; i < m; ++i) {
        double mx = a.at(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, a.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= sum;
    }
    return out;
}

// Per-row layer normalization with learned gain/bias of width C.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5) {
    if (x.rank() != 2) throw ShapeError("layer_norm: expects rank-2 input, got " + shape_str(x.shape()));
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (gain.size() != n || bias.size() != n)
        throw ShapeError("layer_norm: gain/bias width must equal " + std::to_string(n));
    Tensor out = detail::make_result(x.shape(), {x.node(), gain.node(), bias.node()}, [m, n, eps](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        std::vector<double> xhat(n);
        for (std::size_t i = 0; i < m; ++i) {
            const double* xr = px.value.data() + i * n;
            const double* dy = self.grad.data() + i * n;
            double mu = 0.0;
            for (std::size_t j = 0; j < n; ++j) mu += xr[j];
            mu /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
            var /= static_cast<double>(n);
            const double inv = 1.0 / std::sqrt(var + eps);
            for (std::size_t j = 0; j < n; ++j) xhat[j] = (xr[j] - mu) * inv;
            if (pg.requires_grad)
                for (std::size_t j = 0; j < n; ++j) pg.grad[j] += dy[j] * xhat[j];
            if (pb.requires_grad)
                for (std::size_t j = 0; j < n; ++j) pb.grad[j] += dy[j];
            if (px.requires_grad) {
                double m1 = 0.0, m2 = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dxh = dy[j] * pg.value[j];
                    m1 += dxh;
                    m2 += dxh * xhat[j];
                }
                m1 /= static_cast<double>(n);
                m2 /= static_cast<double>(n);
                double* dx = px.grad.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dxh = dy[j] * pg.value[j];
                    dx[j] += inv * (dxh - m1 - xhat[j] * m2);
                }
            }
        }
    });
    for (std::size_t i = 0; i < m; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += x.at(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (x.at(i, j) - mu) * (x.at(i, j) - mu);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = gain.at(j) * ((x.at(i, j) - mu) * inv) + bias.at(j);
    }
    return out;
}

// y[r, c] = x[r, c] + b[c].  The one sanctioned broadcast.
inline Tensor add_row_bias(const Tensor& x, const Tensor& b) {
    if (x.rank() != 2) throw ShapeError("add_row_bias: expects rank-2 input");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (b.size() != n) throw ShapeError("add_row_bias: bias width " + std::to_string(b.size()) + " != " + std::to_string(n));
    Tensor out = detail::make_result(x.shape(), {x.node(), b.node()}, [m, n](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pb = *self.parents[1];
        if (px.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) + b.at(j);
    return out;
}

// Feature-wise affine modulation: y[r, c] = gamma[c] * x[r, c] + beta[c],
// broadcast over rows.  gamma/beta are width-C vectors (or 1xC).
inline Tensor film_modulate(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
    if (x.rank() != 2) throw ShapeError("film_modulate: expects rank-2 input");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (gamma.size() != n || beta.size() != n)
        throw ShapeError("film_modulate: gamma/beta width must equal " + std::to_string(n));
    Tensor out = detail::make_result(x.shape(), {x.node(), gamma.node(), beta.node()}, [m, n](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        if (px.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) px.grad[i * n + j] += self.grad[i * n + j] * pg.value[j];
        if (pg.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) pg.grad[j] += self.grad[i * n + j] * px.value[i * n + j];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = gamma.at(j) * x.at(i, j) + beta.at(j);
    return out;
}

// ---------------------------------------------------------------------------
// Shape surgery
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size())
        throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes element count");
    Tensor out = detail::make_result(std::move(shape), {x.node()}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    });
    out.data() = x.data();
    return out;
}

inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("concat_rows: " + shape_str(a.shape()) + " with " + shape_str(b.shape()));
    const std::size_t ra = a.dim(0), rb = b.dim(0), n = a.dim(1);
    Tensor out = detail::make_result({ra + rb, n}, {a.node(), b.node()}, [ra, rb, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad)
            for (std::size_t i = 0; i < ra * n; ++i) pa.grad[i] += self.grad[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < rb * n; ++i) pb.grad[i] += self.grad[ra * n + i];
    });
    std::copy(a.data().begin(), a.data().end(), out.data().begin());
    std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(ra * n));
    return out;
}

inline Tensor concat_last_dim(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
        throw ShapeError("concat_last_dim: " + shape_str(a.shape()) + " with " + shape_str(b.shape()));
    const std::size_t m = a.dim(0), na = a.dim(1), nb = b.dim(1);
    Tensor out = detail::make_result({m, na + nb}, {a.node(), b.node()}, [m, na, nb](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const std::size_t n = na + nb;
        for (std::size_t i = 0; i < m; ++i) {
            if (pa.requires_grad)
                for (std::size_t j = 0; j < na; ++j) pa.grad[i * na + j] += self.grad[i * n + j];
            if (pb.requires_grad)
                for (std::size_t j = 0; j < nb; ++j) pb.grad[i * nb + j] += self.grad[i * n + na + j];
        }
    });
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < na; ++j) out.at(i, j) = a.at(i, j);
        for (std::size_t j = 0; j < nb; ++j) out.at(i, na + j) = b.at(i, j);
    }
    return out;
}

inline Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
    if (x.rank() != 2 || r1 > x.dim(0) || r0 >= r1)
        throw ShapeError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) + ") of " + shape_str(x.shape()));
    const std::size_t n = x.dim(1), rows = r1 - r0;
    Tensor out = detail::make_result({rows, n}, {x.node()}, [r0, rows, n](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < rows * n; ++i) p.grad[r0 * n + i] += self.grad[i];
    });
    std::copy(x.data().begin() + static_cast<std::ptrdiff_t>(r0 * n),
              x.data().begin() + static_cast<std::ptrdiff_t>(r1 * n), out.data().begin());
    return out;
}

inline Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    if (x.rank() != 2 || c1 > x.dim(1) || c0 >= c1)
        throw ShapeError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " + shape_str(x.shape()));
    const std::size_t m = x.dim(0), n = x.dim(1), cols = c1 - c0;
    Tensor out = detail::make_result({m, cols}, {x.node()}, [c0, m, n, cols](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < cols; ++j) p.grad[i * n + c0 + j] += self.grad[i * cols + j];
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = x.at(i, c0 + j);
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

// [T x d] -> [1 x d], mean over token rows.
inline Tensor mean_pool_tokens(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("mean_pool_tokens: expects rank-2, got " + shape_str(x.shape()));
    const std::size_t t = x.dim(0), n = x.dim(1);
    Tensor out = detail::make_result({1, n}, {x.node()}, [t, n](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        const double inv = 1.0 / static_cast<double>(t);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += self.grad[j] * inv;
    });
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(0, j) += x.at(i, j);
    for (std::size_t j = 0; j < n; ++j) out.at(0, j) /= static_cast<double>(t);
    return out;
}

inline Tensor sum_all(const Tensor& x) {
    Tensor out = detail::make_result({1}, {x.node()}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (auto& g : p.grad) g += self.grad[0];
    });
    out.at(0) = std::accumulate(x.data().begin(), x.data().end(), 0.0);
    return out;
}

inline Tensor mean_all(const Tensor& x) {
    const double inv = 1.0 / static_cast<double>(x.size());
    Tensor out = detail::make_result({1}, {x.node()}, [inv](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        for (auto& g : p.grad) g += self.grad[0] * inv;
    });
    out.at(0) = std::accumulate(x.data().begin(), x.data().end(), 0.0) * inv;
    return out;
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

// Reverse-mode sweep from a scalar loss.  Visits reachable recorded nodes in
// reverse topological order exactly once and accumulates into every
// grad-participating leaf.
inline void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) throw UsageError("backward: loss must be a defined scalar");
    auto root = loss.node();
    if (!root->requires_grad) return;
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<detail::Node*> stack{root.get()};
    seen.insert(root.get());
    while (!stack.empty()) {
        detail::Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents)
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(), [](const detail::Node* a, const detail::Node* b) { return a->seq > b->seq; });
    root->grad[0] = 1.0;
    for (detail::Node* n : order)
        if (n->backprop) n->backprop(*n);
}

}  // namespace uvrec
