#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "uvrec/imaging.hpp"
#include "uvrec/metrics.hpp"
#include "uvrec/rng.hpp"
#include "uvrec/sky.hpp"

using namespace uvrec;

namespace {

SkyImage delta_sky(std::size_t n, std::size_t r, std::size_t c, double flux = 1.0) {
    SkyImage sky;
    sky.n = n;
    sky.label = "delta";
    sky.pixels.assign(n * n, 0.0);
    sky.pixels[r * n + c] = flux;
    return sky;
}

ComplexGrid random_hermitian_grid(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    ComplexGrid g = ComplexGrid::zeros(n);
    for (std::size_t i = 0; i < n * n; ++i) {
        g.re[i] = rng.uniform(-1.0, 1.0);
        g.im[i] = rng.uniform(-1.0, 1.0);
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t idx = r * n + c, conj = conjugate_index(r, c, n);
            if (conj == idx) {
                g.im[idx] = 0.0;
            } else if (conj > idx) {
                g.re[conj] = g.re[idx];
                g.im[conj] = -g.im[idx];
            }
        }
    return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// transforms
// ---------------------------------------------------------------------------

TEST_CASE("inverse transform undoes the forward transform", "[imaging]") {
    SkyImage sky = make_synthetic_sky("spiral", 64, 4);
    std::vector<double> back = ift_image(dense_visibility(sky));
    double worst = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) worst = std::max(worst, std::abs(back[i] - sky.pixels[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("a flat spectrum images to a single central peak", "[imaging]") {
    const std::size_t n = 32;
    ComplexGrid g = ComplexGrid::zeros(n);
    for (auto& v : g.re) v = 1.0;
    std::vector<double> img = ift_image(g);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (r == n / 2 && c == n / 2)
                CHECK_THAT(img[r * n + c], Catch::Matchers::WithinAbs(1.0, 1e-12));
            else
                CHECK(std::abs(img[r * n + c]) < 1e-12);
        }
}

TEST_CASE("the inverse transform is linear", "[imaging]") {
    const std::size_t n = 32;
    ComplexGrid a = random_hermitian_grid(n, 1), b = random_hermitian_grid(n, 2);
    ComplexGrid sum = ComplexGrid::zeros(n);
    for (std::size_t i = 0; i < n * n; ++i) {
        sum.re[i] = a.re[i] + b.re[i];
        sum.im[i] = a.im[i] + b.im[i];
    }
    std::vector<double> ia = ift_image(a), ib = ift_image(b), is = ift_image(sum);
    for (std::size_t i = 0; i < n * n; ++i) CHECK_THAT(is[i], Catch::Matchers::WithinAbs(ia[i] + ib[i], 1e-12));
}

TEST_CASE("a non-Hermitian grid leaves an imaginary residue and is rejected", "[imaging][errors]") {
    ComplexGrid g = ComplexGrid::zeros(16);
    g.im[3 * 16 + 5] = 1.0;  // breaks conjugate symmetry
    CHECK_THROWS_AS(ift_image(g), DegenerateError);
}

// ---------------------------------------------------------------------------
// dirty image / dirty beam
// ---------------------------------------------------------------------------

TEST_CASE("complete sampling reproduces the sky as its dirty image", "[imaging]") {
    SkyImage sky = make_synthetic_sky("blobs", 64, 8);
    VisibilitySet vs = sample_visibility(sky, full_coverage(64), 0.0, 1);
    std::vector<double> dirty = dirty_image(vs);
    double worst = 0.0;
    for (std::size_t i = 0; i < dirty.size(); ++i) worst = std::max(worst, std::abs(dirty[i] - sky.pixels[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("the dirty beam peaks at exactly 1 in the central pixel", "[imaging]") {
    SkyImage sky = make_synthetic_sky("points", 64, 2);
    VisibilitySet vs = sample_visibility(sky, compute_uv_coverage(eht8_array(6), 64), 0.0, 1);
    std::vector<double> beam = dirty_beam(vs);
    CHECK(beam[32 * 64 + 32] == 1.0);
    for (double v : beam) CHECK(v <= 1.0 + 1e-12);
}

TEST_CASE("a point source's dirty image is the shifted scaled dirty beam", "[imaging]") {
    const std::size_t n = 64;
    const double flux = 0.8;
    SkyImage sky = delta_sky(n, 40, 25, flux);
    VisibilitySet vs = sample_visibility(sky, compute_uv_coverage(eht8_array(10), n), 0.0, 1);
    std::vector<double> dirty = dirty_image(vs);
    std::vector<double> beam = dirty_beam(vs);
    const double scale = flux * coverage_fraction(vs);
    double worst = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t br = (r + n / 2 + n - 40) % n, bc = (c + n / 2 + n - 25) % n;
            worst = std::max(worst, std::abs(dirty[r * n + c] - scale * beam[br * n + bc]));
        }
    CHECK(worst < 1e-8);
}

// ---------------------------------------------------------------------------
// CLEAN
// ---------------------------------------------------------------------------

TEST_CASE("cleaning the beam itself starts with a gain-sized central component", "[imaging]") {
    SkyImage sky = make_synthetic_sky("points", 64, 3);
    VisibilitySet vs = sample_visibility(sky, compute_uv_coverage(eht8_array(8), 64), 0.0, 1);
    std::vector<double> beam = dirty_beam(vs);
    CleanConfig cfg;
    cfg.gain = 0.2;
    cfg.max_iter = 1;
    CleanResult res = hogbom_clean(beam, beam, 64, cfg);
    REQUIRE(res.components.size() == 1);
    CHECK(res.components[0].row == 32);
    CHECK(res.components[0].col == 32);
    CHECK_THAT(res.components[0].flux, Catch::Matchers::WithinAbs(0.2, 1e-12));
}

TEST_CASE("clean recovers two point sources with the right flux split", "[imaging]") {
    const std::size_t n = 64;
    SkyImage sky = delta_sky(n, 22, 20, 1.0);
    sky.pixels[44 * n + 45] = 0.5;
    UVCoverage cov = compute_uv_coverage(eht8_array(24), n);
    INFO("coverage fraction " << cov.fraction());
    CHECK(cov.fraction() > 0.1);  // sparse but substantial sampling regime
    CHECK(cov.fraction() < 0.5);
    VisibilitySet vs = sample_visibility(sky, cov, 0.0, 1);
    CleanConfig cfg;
    cfg.gain = 0.1;
    cfg.max_iter = 500;
    cfg.threshold = 0.01;
    CleanResult res = hogbom_clean(dirty_image(vs), dirty_beam(vs), n, cfg);

    // the dirty image of flux S is S * fraction * beam, so CLEAN components
    // integrate to about S * fraction per source
    const double frac = coverage_fraction(vs);
    double cluster_a = 0.0, cluster_b = 0.0, stray = 0.0;
    for (const auto& comp : res.components) {
        const double da = std::hypot(static_cast<double>(comp.row) - 22.0, static_cast<double>(comp.col) - 20.0);
        const double db = std::hypot(static_cast<double>(comp.row) - 44.0, static_cast<double>(comp.col) - 45.0);
        if (da <= 3.0)
            cluster_a += comp.flux;
        else if (db <= 3.0)
            cluster_b += comp.flux;
        else
            stray += std::abs(comp.flux);
    }
    CHECK_THAT(cluster_a, Catch::Matchers::WithinRel(1.0 * frac, 0.10));
    CHECK_THAT(cluster_b, Catch::Matchers::WithinRel(0.5 * frac, 0.10));
    CHECK(stray < 0.1 * (cluster_a + cluster_b));

    // the per-iteration residual peak (|flux|/gain) never increases
    for (std::size_t i = 1; i < res.components.size(); ++i)
        CHECK(std::abs(res.components[i].flux) <= std::abs(res.components[i - 1].flux) + 1e-12);
}

TEST_CASE("a unit threshold stops cleaning before the first component", "[imaging]") {
    SkyImage sky = make_synthetic_sky("blobs", 32, 6);
    VisibilitySet vs = sample_visibility(sky, compute_uv_coverage(eht8_array(6), 32), 0.0, 1);
    std::vector<double> dirty = dirty_image(vs);
    CleanConfig cfg;
    cfg.threshold = 1.0;
    CleanResult res = hogbom_clean(dirty, dirty_beam(vs), 32, cfg);
    CHECK(res.iterations == 0);
    CHECK(res.components.empty());
    CHECK(res.residual == dirty);
}

TEST_CASE("restored image equals components convolved with the fit plus residual", "[imaging]") {
    const std::size_t n = 32;
    SkyImage sky = make_synthetic_sky("points", n, 5);
    VisibilitySet vs = sample_visibility(sky, compute_uv_coverage(eht8_array(9), n), 0.0, 1);
    CleanConfig cfg;
    cfg.max_iter = 40;
    CleanResult res = hogbom_clean(dirty_image(vs), dirty_beam(vs), n, cfg);
    REQUIRE_FALSE(res.components.empty());
    std::vector<double> expect = res.residual;
    for (const auto& comp : res.components)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double dr = static_cast<double>((r + n / 2 + n - comp.row) % n) - static_cast<double>(n / 2);
                const double dc = static_cast<double>((c + n / 2 + n - comp.col) % n) - static_cast<double>(n / 2);
                expect[r * n + c] += comp.flux * std::exp(-(res.beam_fit.a * dc * dc + res.beam_fit.b * dc * dr + res.beam_fit.c * dr * dr));
            }
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK_THAT(res.restored[i], Catch::Matchers::WithinAbs(expect[i], 1e-12));
}

TEST_CASE("clean rejects invalid inputs", "[imaging][errors]") {
    std::vector<double> map(16 * 16, 0.0);
    CHECK_THROWS_AS(hogbom_clean(map, map, 16), UsageError);  // zero beam
    std::vector<double> beam = map;
    beam[8 * 16 + 8] = 1.0;
    CleanConfig bad;
    bad.gain = 0.0;
    CHECK_THROWS_AS(hogbom_clean(map, beam, 16, bad), UsageError);
    CHECK_THROWS_AS(hogbom_clean(std::vector<double>(4, 0.0), beam, 16), ShapeError);
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

TEST_CASE("psnr and ssim are exact on identical images", "[imaging]") {
    SkyImage sky = make_synthetic_sky("ring", 64, 1);
    CHECK(psnr(sky.pixels, sky.pixels, 1.0) == 100.0);
    CHECK(ssim(sky.pixels, sky.pixels, 64) == 1.0);
}

TEST_CASE("uniform error of 0.1 against peak 1 gives 20 dB", "[imaging]") {
    std::vector<double> a(64, 0.5), b(64, 0.6);
    CHECK_THAT(psnr(a, b, 1.0), Catch::Matchers::WithinAbs(20.0, 1e-12));
}

TEST_CASE("psnr decreases with noise amplitude", "[imaging]") {
    SkyImage sky = make_synthetic_sky("blobs", 64, 7);
    Rng rng(5);
    std::vector<double> noise(sky.pixels.size());
    for (auto& v : noise) v = rng.normal();
    double prev = 1e9;
    for (double amp : {0.01, 0.05, 0.2}) {
        std::vector<double> noisy = sky.pixels;
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += amp * noise[i];
        const double p = psnr(sky.pixels, noisy, 1.0);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim stays within [-1, 1] and penalizes structure loss", "[imaging]") {
    SkyImage a = make_synthetic_sky("spiral", 64, 2);
    SkyImage b = make_synthetic_sky("ring", 64, 2);
    const double s = ssim(a.pixels, b.pixels, 64);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    CHECK(s < ssim(a.pixels, a.pixels, 64));
}

TEST_CASE("metrics validate their inputs", "[imaging][errors]") {
    std::vector<double> a(16, 0.0), b(9, 0.0);
    CHECK_THROWS_AS(psnr(a, b, 1.0), ShapeError);
    CHECK_THROWS_AS(psnr(a, a, 0.0), UsageError);
    CHECK_THROWS_AS(ssim(a, b, 4), ShapeError);
    CHECK_THROWS_AS(ssim(a, a, 4), ShapeError);  // 4x4 grid is smaller than the window
}
