#pragma once
// Independent gradient oracle: central finite differences over a forward-only
// evaluation, compared against the tape's analytic gradients.
#include <functional>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "uvrec/tensor.hpp"

namespace oracles {

// Largest relative mismatch between two gradient vectors.  Entries that are
// both tiny in absolute terms are treated as agreeing (finite differences
// cannot resolve them).
inline double max_rel_err(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    REQUIRE(analytic.size() == numeric.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
        if (denom < 1e-7) continue;
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

// Checks d loss / d x for `make_loss`: analytic via backward(), numeric via
// central differences re-running the forward pass.  `make_loss` must be a
// pure function of the tensor's values.
inline double grad_check(const uvrec::Shape& shape, std::vector<double> x0,
                         const std::function<uvrec::Tensor(const uvrec::Tensor&)>& make_loss, double h = 1e-5) {
    uvrec::Tensor x = uvrec::Tensor::from_data(shape, x0, /*requires_grad=*/true);
    uvrec::Tensor loss = make_loss(x);
    REQUIRE(loss.size() == 1);
    uvrec::backward(loss);
    std::vector<double> analytic = x.grad();

    std::vector<double> numeric(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        std::vector<double> xp = x0, xm = x0;
        xp[i] += h;
        xm[i] -= h;
        const double fp = make_loss(uvrec::Tensor::from_data(shape, xp)).at(0);
        const double fm = make_loss(uvrec::Tensor::from_data(shape, xm)).at(0);
        numeric[i] = (fp - fm) / (2.0 * h);
    }
    return max_rel_err(analytic, numeric);
}

inline double grad_check(const uvrec::Shape& shape, uvrec::Rng& rng,
                         const std::function<uvrec::Tensor(const uvrec::Tensor&)>& make_loss, double h = 1e-5) {
    std::vector<double> x0(uvrec::numel(shape));
    for (auto& v : x0) v = rng.uniform(-1.0, 1.0);
    return grad_check(shape, std::move(x0), make_loss, h);
}

// Reduces an op's multi-value output to a scalar that is sensitive to every
// entry, with fixed seeded mixing weights.
inline uvrec::Tensor mix_to_scalar(const uvrec::Tensor& y, std::uint64_t seed = 77) {
    uvrec::Rng rng(seed);
    uvrec::Tensor w = uvrec::Tensor::uniform(y.shape(), rng, 0.1, 1.0);
    return uvrec::sum_all(uvrec::hadamard(y, w));
}

}  // namespace oracles
