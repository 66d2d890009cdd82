#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "uvrec/conv.hpp"
#include "uvrec/grid_ops.hpp"
#include "uvrec/optim.hpp"
#include "uvrec/tensor.hpp"
#include "uvrec/tensor_io.hpp"

#include "oracles.hpp"

using namespace uvrec;
using oracles::grad_check;
using oracles::mix_to_scalar;

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

TEST_CASE("matmul by identity returns the operand", "[numerics]") {
    Tensor eye = Tensor::zeros({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Rng rng(1);
    Tensor a = Tensor::uniform({3, 4}, rng, -2.0, 2.0);
    Tensor y = matmul(eye, a);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == a.at(i));
}

TEST_CASE("matmul scalar case", "[numerics]") {
    Tensor y = matmul(Tensor::from_data({1, 1}, {2.0}), Tensor::from_data({1, 1}, {3.0}));
    CHECK(y.at(0) == 6.0);
}

TEST_CASE("matmul gradients match finite differences", "[numerics][grad]") {
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor b = Tensor::uniform({5, 3}, rng, -1.0, 1.0);
        Rng r2(100 + static_cast<std::uint64_t>(rep));
        CHECK(grad_check({4, 5}, r2, [&](const Tensor& x) { return mix_to_scalar(matmul(x, b)); }) < 1e-6);
        Tensor a = Tensor::uniform({4, 5}, rng, -1.0, 1.0);
        Rng r3(200 + static_cast<std::uint64_t>(rep));
        CHECK(grad_check({5, 3}, r3, [&](const Tensor& x) { return mix_to_scalar(matmul(a, x)); }) < 1e-6);
    }
}

TEST_CASE("matmul rejects mismatched inner dims", "[numerics][errors]") {
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2})), ShapeError);
}

// ---------------------------------------------------------------------------
// conv1d / conv2d
// ---------------------------------------------------------------------------

TEST_CASE("conv1d with unit kernel and zero bias is the identity", "[numerics]") {
    Rng rng(3);
    Tensor x = Tensor::uniform({2, 7}, rng, -1.0, 1.0);
    Tensor w = Tensor::zeros({2, 2, 1});
    w.at(0 * 2 * 1) = 1.0;        // w[0][0][0]
    w.at((1 * 2 + 1) * 1) = 1.0;  // w[1][1][0]
    Tensor y = conv1d(x, w, Tensor::zeros({2}));
    REQUIRE(y.shape() == Shape{2, 7});
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("conv1d with zero weights and bias annihilates any input", "[numerics]") {
    Rng rng(4);
    Tensor x = Tensor::uniform({3, 9}, rng, -5.0, 5.0);
    Tensor y = conv1d(x, Tensor::zeros({2, 3, 3}), Tensor::zeros({2}));
    REQUIRE(y.shape() == Shape{2, 9});
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == 0.0);
}

TEST_CASE("conv1d gradients match finite differences", "[numerics][grad]") {
    Rng rng(5);
    Tensor x0 = Tensor::uniform({2, 16}, rng, -1.0, 1.0);
    Tensor w0 = Tensor::uniform({3, 2, 3}, rng, -1.0, 1.0);
    Tensor b0 = Tensor::uniform({3}, rng, -1.0, 1.0);
    Rng ra(300), rb(301), rc(302);
    CHECK(grad_check({2, 16}, ra, [&](const Tensor& x) { return mix_to_scalar(conv1d(x, w0, b0)); }) < 1e-6);
    CHECK(grad_check({3, 2, 3}, rb, [&](const Tensor& w) { return mix_to_scalar(conv1d(x0, w, b0)); }) < 1e-6);
    CHECK(grad_check({3}, rc, [&](const Tensor& b) { return mix_to_scalar(conv1d(x0, w0, b)); }) < 1e-6);
}

TEST_CASE("conv1d rejects kernel larger than padded input", "[numerics][errors]") {
    CHECK_THROWS_AS(conv1d(Tensor::zeros({1, 2}), Tensor::zeros({1, 1, 9}), Tensor::zeros({1}), 1, 0), ShapeError);
}

TEST_CASE("conv2d with unit kernel and zero bias is the identity", "[numerics]") {
    Rng rng(6);
    Tensor x = Tensor::uniform({2, 4, 5}, rng, -1.0, 1.0);
    Tensor w = Tensor::zeros({2, 2, 1, 1});
    w.at(0) = 1.0;          // w[0][0]
    w.at(2 * 1 + 1) = 1.0;  // w[1][1]
    Tensor y = conv2d(x, w, Tensor::zeros({2}));
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("conv2d with zero weights annihilates any input", "[numerics]") {
    Rng rng(7);
    Tensor x = Tensor::uniform({1, 6, 6}, rng, -3.0, 3.0);
    Tensor y = conv2d(x, Tensor::zeros({2, 1, 3, 3}), Tensor::zeros({2}));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == 0.0);
}

TEST_CASE("conv2d gradients match finite differences", "[numerics][grad]") {
    Rng rng(8);
    Tensor x0 = Tensor::uniform({2, 5, 4}, rng, -1.0, 1.0);
    Tensor w0 = Tensor::uniform({2, 2, 3, 3}, rng, -1.0, 1.0);
    Tensor b0 = Tensor::uniform({2}, rng, -1.0, 1.0);
    Rng ra(310), rb(311), rc(312);
    CHECK(grad_check({2, 5, 4}, ra, [&](const Tensor& x) { return mix_to_scalar(conv2d(x, w0, b0)); }) < 1e-6);
    CHECK(grad_check({2, 2, 3, 3}, rb, [&](const Tensor& w) { return mix_to_scalar(conv2d(x0, w, b0)); }) < 1e-6);
    CHECK(grad_check({2}, rc, [&](const Tensor& b) { return mix_to_scalar(conv2d(x0, w0, b)); }) < 1e-6);
}

// ---------------------------------------------------------------------------
// softmax / layer_norm / elementwise
// ---------------------------------------------------------------------------

TEST_CASE("softmax of an equal-value row is uniform", "[numerics]") {
    Tensor y = softmax_rows(Tensor::full({1, 5}, 3.25));
    for (std::size_t j = 0; j < 5; ++j) CHECK_THAT(y.at(j), Catch::Matchers::WithinAbs(0.2, 1e-15));
}

TEST_CASE("softmax of a single-column input is all ones", "[numerics]") {
    Rng rng(9);
    Tensor y = softmax_rows(Tensor::uniform({4, 1}, rng, -9.0, 9.0));
    for (std::size_t i = 0; i < 4; ++i) CHECK(y.at(i) == 1.0);
}

TEST_CASE("softmax hand case [0, ln 3]", "[numerics]") {
    Tensor y = softmax_rows(Tensor::from_data({1, 2}, {0.0, std::log(3.0)}));
    CHECK_THAT(y.at(0), Catch::Matchers::WithinAbs(0.25, 1e-14));
    CHECK_THAT(y.at(1), Catch::Matchers::WithinAbs(0.75, 1e-14));
}

TEST_CASE("softmax rows sum to one with entries in [0,1]", "[numerics]") {
    Rng rng(10);
    Tensor y = softmax_rows(Tensor::uniform({6, 8}, rng, -50.0, 50.0));
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(y.at(i, j) >= 0.0);
            CHECK(y.at(i, j) <= 1.0);
            s += y.at(i, j);
        }
        CHECK_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("softmax gradients match finite differences", "[numerics][grad]") {
    for (int rep = 0; rep < 5; ++rep) {
        Rng r(320 + static_cast<std::uint64_t>(rep));
        CHECK(grad_check({3, 4}, r, [](const Tensor& x) { return mix_to_scalar(softmax_rows(x)); }) < 1e-6);
    }
}

TEST_CASE("layer_norm hand case", "[numerics]") {
    Tensor x = Tensor::from_data({1, 3}, {1.0, 2.0, 3.0});
    Tensor y = layer_norm(x, Tensor::full({3}, 2.0), Tensor::full({3}, 1.0));
    CHECK_THAT(y.at(0), Catch::Matchers::WithinAbs(-1.4494713718167804, 1e-12));
    CHECK_THAT(y.at(1), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(y.at(2), Catch::Matchers::WithinAbs(3.4494713718167804, 1e-12));
}

TEST_CASE("layer_norm with zero gain collapses to the bias", "[numerics]") {
    Rng rng(11);
    Tensor x = Tensor::uniform({2, 4}, rng, -2.0, 2.0);
    Tensor y = layer_norm(x, Tensor::zeros({4}), Tensor::full({4}, 0.75));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == 0.75);
}

TEST_CASE("layer_norm normalizes each row", "[numerics]") {
    Rng rng(12);
    Tensor x = Tensor::uniform({3, 16}, rng, -4.0, 4.0);
    Tensor y = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}));
    for (std::size_t i = 0; i < 3; ++i) {
        double mu = 0.0, var = 0.0;
        for (std::size_t j = 0; j < 16; ++j) mu += y.at(i, j);
        mu /= 16.0;
        for (std::size_t j = 0; j < 16; ++j) var += (y.at(i, j) - mu) * (y.at(i, j) - mu);
        var /= 16.0;
        CHECK_THAT(mu, Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 1e-3));  // eps shifts it slightly
    }
}

TEST_CASE("layer_norm gradients match finite differences", "[numerics][grad]") {
    Rng rng(13);
    Tensor g0 = Tensor::uniform({5}, rng, 0.5, 1.5);
    Tensor b0 = Tensor::uniform({5}, rng, -0.5, 0.5);
    Tensor x0 = Tensor::uniform({3, 5}, rng, -1.0, 1.0);
    Rng ra(330), rb(331), rc(332);
    CHECK(grad_check({3, 5}, ra, [&](const Tensor& x) { return mix_to_scalar(layer_norm(x, g0, b0)); }) < 1e-5);
    CHECK(grad_check({5}, rb, [&](const Tensor& g) { return mix_to_scalar(layer_norm(x0, g, b0)); }) < 1e-6);
    CHECK(grad_check({5}, rc, [&](const Tensor& b) { return mix_to_scalar(layer_norm(x0, g0, b)); }) < 1e-6);
}

TEST_CASE("relu basics and gradients", "[numerics][grad]") {
    Tensor y = relu(Tensor::from_data({1, 2}, {-1.0, 2.0}));
    CHECK(y.at(0) == 0.0);
    CHECK(y.at(1) == 2.0);
    // keep samples away from the kink so the central difference is valid
    Rng rng(14);
    std::vector<double> x0(12);
    for (auto& v : x0) {
        v = rng.uniform(0.2, 1.0);
        if (rng.uniform() < 0.5) v = -v;
    }
    CHECK(grad_check({3, 4}, x0, [](const Tensor& x) { return mix_to_scalar(relu(x)); }) < 1e-6);
}

TEST_CASE("hadamard hand case and gradients", "[numerics][grad]") {
    Tensor y = hadamard(Tensor::from_data({1, 2}, {1.0, 2.0}), Tensor::from_data({1, 2}, {3.0, 4.0}));
    CHECK(y.at(0) == 3.0);
    CHECK(y.at(1) == 8.0);
    Rng rng(15);
    Tensor b = Tensor::uniform({2, 3}, rng, -1.0, 1.0);
    Rng r2(340);
    CHECK(grad_check({2, 3}, r2, [&](const Tensor& x) { return mix_to_scalar(hadamard(x, b)); }) < 1e-6);
}

TEST_CASE("transpose hand case and gradients", "[numerics][grad]") {
    Tensor y = transpose(Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}));
    REQUIRE(y.shape() == Shape{3, 2});
    CHECK(y.at(0, 0) == 1.0);
    CHECK(y.at(0, 1) == 4.0);
    CHECK(y.at(2, 1) == 6.0);
    Rng r(341);
    CHECK(grad_check({3, 4}, r, [](const Tensor& x) { return mix_to_scalar(transpose(x)); }) < 1e-6);
}

TEST_CASE("mean_pool_tokens hand case and gradients", "[numerics][grad]") {
    Tensor y = mean_pool_tokens(Tensor::from_data({2, 2}, {1, 2, 3, 4}));
    REQUIRE(y.shape() == Shape{1, 2});
    CHECK(y.at(0) == 2.0);
    CHECK(y.at(1) == 3.0);
    Rng r(342);
    CHECK(grad_check({4, 3}, r, [](const Tensor& x) { return mix_to_scalar(mean_pool_tokens(x)); }) < 1e-6);
}

TEST_CASE("concat_last_dim hand case and gradients", "[numerics][grad]") {
    Tensor y = concat_last_dim(Tensor::from_data({2, 1}, {1, 3}), Tensor::from_data({2, 2}, {5, 6, 7, 8}));
    REQUIRE(y.shape() == Shape{2, 3});
    CHECK(y.at(0, 0) == 1.0);
    CHECK(y.at(0, 1) == 5.0);
    CHECK(y.at(1, 2) == 8.0);
    Rng ra(343), rb(344);
    Tensor b0 = Tensor::from_data({2, 2}, {5, 6, 7, 8});
    Tensor a0 = Tensor::from_data({2, 1}, {1, 3});
    CHECK(grad_check({2, 1}, ra, [&](const Tensor& a) { return mix_to_scalar(concat_last_dim(a, b0)); }) < 1e-6);
    CHECK(grad_check({2, 2}, rb, [&](const Tensor& b) { return mix_to_scalar(concat_last_dim(a0, b)); }) < 1e-6);
}

TEST_CASE("concat_rows, slices and reshape round-trip with gradients", "[numerics][grad]") {
    Rng rng(16);
    Tensor a = Tensor::uniform({2, 3}, rng, -1.0, 1.0);
    Tensor b = Tensor::uniform({4, 3}, rng, -1.0, 1.0);
    Tensor cat = concat_rows(a, b);
    REQUIRE(cat.shape() == Shape{6, 3});
    Tensor back = slice_rows(cat, 2, 6);
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back.at(i) == b.at(i));
    Tensor cols = slice_cols(cat, 1, 3);
    REQUIRE(cols.shape() == Shape{6, 2});
    CHECK(cols.at(0, 0) == a.at(0, 1));
    Rng ra(350), rb(351), rc(352);
    Tensor b0 = b.detached();
    CHECK(grad_check({2, 3}, ra, [&](const Tensor& x) { return mix_to_scalar(concat_rows(x, b0)); }) < 1e-6);
    CHECK(grad_check({5, 4}, rb, [](const Tensor& x) { return mix_to_scalar(slice_rows(x, 1, 4)); }) < 1e-6);
    CHECK(grad_check({5, 4}, rc, [](const Tensor& x) { return mix_to_scalar(slice_cols(reshape(x, {4, 5}), 0, 3)); }) < 1e-6);
}

TEST_CASE("add_row_bias and film_modulate contracts", "[numerics][grad]") {
    Rng rng(17);
    Tensor x = Tensor::uniform({3, 4}, rng, -1.0, 1.0);
    Tensor y = film_modulate(x, Tensor::full({4}, 1.0), Tensor::zeros({4}));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == x.at(i));  // gamma=1, beta=0 is identity
    Tensor beta = Tensor::from_data({4}, {1, 2, 3, 4});
    Tensor z = film_modulate(x, Tensor::zeros({4}), beta);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(z.at(i, j) == beta.at(j));  // gamma=0 broadcasts beta
    Tensor g0 = Tensor::from_data({4}, {0.5, -1.0, 2.0, 1.5});
    Tensor x0 = x.detached();
    Rng ra(360), rb(361), rc(362), rd(363);
    CHECK(grad_check({3, 4}, ra, [&](const Tensor& t) { return mix_to_scalar(film_modulate(t, g0, beta)); }) < 1e-6);
    CHECK(grad_check({4}, rb, [&](const Tensor& g) { return mix_to_scalar(film_modulate(x0, g, beta)); }) < 1e-6);
    CHECK(grad_check({4}, rc, [&](const Tensor& b) { return mix_to_scalar(film_modulate(x0, g0, b)); }) < 1e-6);
    CHECK(grad_check({4}, rd, [&](const Tensor& b) { return mix_to_scalar(add_row_bias(x0, b)); }) < 1e-6);
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

TEST_CASE("backward of sum gives all-ones gradient", "[numerics]") {
    Tensor x = Tensor::zeros({2, 3}, true);
    backward(sum_all(x));
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of sum of squares gives 2x", "[numerics]") {
    Rng rng(18);
    Tensor x = Tensor::uniform({7}, rng, -2.0, 2.0, true);
    backward(sum_all(hadamard(x, x)));
    for (std::size_t i = 0; i < 7; ++i) CHECK_THAT(x.grad()[i], Catch::Matchers::WithinRel(2.0 * x.at(i), 1e-14));
}

TEST_CASE("composite conv-relu-matmul graph matches finite differences", "[numerics][grad]") {
    Rng rng(19);
    Tensor w1 = Tensor::uniform({3, 2, 3}, rng, -0.7, 0.7);
    Tensor b1 = Tensor::uniform({3}, rng, -0.2, 0.2);
    Tensor w2 = Tensor::uniform({8, 4}, rng, -0.7, 0.7);
    auto net = [&](const Tensor& x) {
        Tensor h = relu(conv1d(x, w1, b1));          // [3 x 8]
        Tensor y = matmul(reshape(h, {3, 8}), w2);   // [3 x 4]
        return mix_to_scalar(y);
    };
    Rng r(370);
    CHECK(grad_check({2, 8}, r, net, 1e-5) < 1e-4);
}

TEST_CASE("backward rejects non-scalar loss", "[numerics][errors]") {
    Tensor x = Tensor::zeros({2, 2}, true);
    CHECK_THROWS_AS(backward(add(x, x)), UsageError);
}

TEST_CASE("repeated backward on separate graphs accumulates into leaves", "[numerics]") {
    Tensor x = Tensor::full({3}, 1.0, true);
    backward(sum_all(x));
    backward(sum_all(x));
    for (double g : x.grad()) CHECK(g == 2.0);
    x.zero_grad();
    for (double g : x.grad()) CHECK(g == 0.0);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

TEST_CASE("adam leaves parameters unchanged on zero gradient", "[numerics]") {
    std::vector<Tensor> params{Tensor::full({3}, 1.5, true)};
    AdamState st;
    adam_step(params, st, {});
    for (std::size_t i = 0; i < 3; ++i) CHECK(params[0].at(i) == 1.5);
}

TEST_CASE("adam first step moves by about lr", "[numerics]") {
    std::vector<Tensor> params{Tensor::full({1}, 0.0, true)};
    params[0].grad()[0] = 1.0;
    AdamState st;
    AdamConfig cfg;
    cfg.lr = 0.1;
    adam_step(params, st, cfg);
    CHECK_THAT(params[0].at(0), Catch::Matchers::WithinAbs(-0.1, 1e-6));
}

TEST_CASE("adam drives a quadratic toward zero in 100 steps", "[numerics]") {
    std::vector<Tensor> params{Tensor::full({1}, 1.0, true)};
    AdamState st;
    AdamConfig cfg;
    cfg.lr = 0.1;
    for (int t = 0; t < 100; ++t) {
        params[0].zero_grad();
        params[0].grad()[0] = 2.0 * params[0].at(0);
        adam_step(params, st, cfg);
    }
    CHECK(std::abs(params[0].at(0)) < 0.1);
}

// ---------------------------------------------------------------------------
// grid ops
// ---------------------------------------------------------------------------

TEST_CASE("scatter at exact cell centers lands in single cells", "[numerics]") {
    Tensor f = Tensor::from_data({2, 2}, {1.0, 2.0, 10.0, 20.0});
    Tensor g = scatter_bilinear(f, {{1.0, 2.0}, {3.0, 0.0}}, 4, 4);
    REQUIRE(g.shape() == Shape{2, 4, 4});
    CHECK(g.at(1 * 4 + 2) == 1.0);
    CHECK(g.at(3 * 4 + 0) == 2.0);
    CHECK(g.at(16 + 1 * 4 + 2) == 10.0);
    CHECK(g.at(16 + 3 * 4 + 0) == 20.0);
    double total = 0.0;
    for (std::size_t i = 0; i < 16; ++i) total += g.at(i);
    CHECK(total == 3.0);  // mass conserved for cell-centered samples
}

TEST_CASE("scatter at a sub-cell position averages into the 4 neighbours", "[numerics]") {
    Tensor f = Tensor::from_data({1, 1}, {5.0});
    Tensor g = scatter_bilinear(f, {{1.25, 2.75}}, 4, 4);
    // cell averaging: each touched cell holds the weighted average of its
    // contributors, which for a lone sample is the sample value itself
    CHECK(g.at(1 * 4 + 2) == 5.0);
    CHECK(g.at(1 * 4 + 3) == 5.0);
    CHECK(g.at(2 * 4 + 2) == 5.0);
    CHECK(g.at(2 * 4 + 3) == 5.0);
    CHECK(g.at(0) == 0.0);
}

TEST_CASE("scatter gradients match finite differences", "[numerics][grad]") {
    std::vector<std::pair<double, double>> pos{{0.5, 1.5}, {2.0, 2.0}, {1.25, 0.75}};
    Rng r(380);
    CHECK(grad_check({2, 3}, r, [&](const Tensor& f) { return mix_to_scalar(scatter_bilinear(f, pos, 4, 4)); }) < 1e-6);
}

TEST_CASE("scatter rejects out-of-grid positions", "[numerics][errors]") {
    CHECK_THROWS_AS(scatter_bilinear(Tensor::zeros({1, 1}), {{-0.1, 0.0}}, 4, 4), ShapeError);
}

TEST_CASE("extract_patches shape, locality and gradients", "[numerics][grad]") {
    Rng rng(20);
    Tensor x = Tensor::uniform({1, 16, 16}, rng, -1.0, 1.0);
    Tensor t = extract_patches(x, 8);
    REQUIRE(t.shape() == Shape{4, 64});
    // perturb one patch; only that token row may change
    Tensor x2 = x.detached();
    x2.at((0 * 16 + 9) * 16 + 3) += 1.0;  // patch row 1, col 0 -> token 2
    Tensor t2 = extract_patches(x2, 8);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 64; ++c) {
            if (r == 2)
                continue;
            CHECK(t2.at(r, c) == t.at(r, c));
        }
    CHECK(t2.at(2, 8 + 3) != t.at(2, 8 + 3));
    Rng r(381);
    CHECK(grad_check({2, 4, 4}, r, [](const Tensor& m) { return mix_to_scalar(extract_patches(m, 2)); }) < 1e-6);
}

TEST_CASE("mask_overwrite pins masked cells and routes gradients", "[numerics]") {
    Tensor x = Tensor::from_data({2, 2}, {1, 2, 3, 4}, true);
    Tensor v = Tensor::from_data({2, 2}, {10, 20, 30, 40}, true);
    std::vector<std::uint8_t> mask{1, 0, 0, 1};
    Tensor y = mask_overwrite(x, mask, v);
    CHECK(y.at(0) == 10.0);
    CHECK(y.at(1) == 2.0);
    CHECK(y.at(2) == 3.0);
    CHECK(y.at(3) == 40.0);
    backward(sum_all(y));
    CHECK(x.grad() == std::vector<double>{0, 1, 1, 0});
    CHECK(v.grad() == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("symmetrize_centered projects a grid onto Hermitian form", "[numerics]") {
    const std::size_t n = 8;
    Rng rng(21);
    Tensor re = Tensor::uniform({n, n}, rng, -1.0, 1.0);
    Tensor im = Tensor::uniform({n, n}, rng, -1.0, 1.0);
    Tensor sre = symmetrize_centered(re, +1.0);
    Tensor sim = symmetrize_centered(im, -1.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t mc = conjugate_cell(r, c, n);
            CHECK(sre.at(r * n + c) == sre.at(mc));
            CHECK(sim.at(r * n + c) == -sim.at(mc));
        }
    // self-mirrored cells of the imaginary part are exactly zero
    for (std::size_t r : {std::size_t{0}, n / 2})
        for (std::size_t c : {std::size_t{0}, n / 2}) CHECK(sim.at(r * n + c) == 0.0);
    // an already-Hermitian grid passes through bitwise
    Tensor sre2 = symmetrize_centered(sre, +1.0);
    Tensor sim2 = symmetrize_centered(sim, -1.0);
    for (std::size_t i = 0; i < n * n; ++i) {
        CHECK(sre2.at(i) == sre.at(i));
        CHECK(sim2.at(i) == sim.at(i));
    }
    Rng ra(382), rb(383);
    CHECK(grad_check({4, 4}, ra, [](const Tensor& x) { return mix_to_scalar(symmetrize_centered(x, +1.0)); }) < 1e-6);
    CHECK(grad_check({4, 4}, rb, [](const Tensor& x) { return mix_to_scalar(symmetrize_centered(x, -1.0)); }) < 1e-6);
}

// ---------------------------------------------------------------------------
// IO and determinism
// ---------------------------------------------------------------------------

TEST_CASE("tensor dump round-trips bitwise", "[numerics][io]") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "uvrec_test_tensor.vvt";
    Rng rng(22);
    Tensor t = Tensor::uniform({3, 5, 2}, rng, -1e6, 1e6);
    save_tensor(path.string(), t);
    Tensor u = load_tensor(path.string());
    REQUIRE(u.shape() == t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(u.at(i) == t.at(i));
    fs::remove(path);
}

TEST_CASE("loading a non-tensor file fails with an IO error", "[numerics][errors]") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "uvrec_test_bogus.vvt";
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    std::fputs("not a tensor", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_tensor(path.string()), IoError);
    CHECK_THROWS_AS(load_tensor("/nonexistent/dir/x.vvt"), IoError);
    fs::remove(path);
}

TEST_CASE("seeded tensors are bit-identical across runs", "[numerics]") {
    Rng a(12345), b(12345);
    Tensor ta = Tensor::uniform({4, 4}, a, -1.0, 1.0);
    Tensor tb = Tensor::uniform({4, 4}, b, -1.0, 1.0);
    for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta.at(i) == tb.at(i));
    Rng c(1), d(2);
    Tensor tc = Tensor::uniform({4, 4}, c, -1.0, 1.0);
    Tensor td = Tensor::uniform({4, 4}, d, -1.0, 1.0);
    bool same = true;
    for (std::size_t i = 0; i < tc.size(); ++i) same = same && tc.at(i) == td.at(i);
    CHECK_FALSE(same);
}
