#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "sftip/fft.hpp"
#include "sftip/masks.hpp"

using namespace sftip;

namespace {

// Independent window formula: periodic Hann lobe of length 2*hop placed at
// offset i*hop, folded onto the torus. Evaluated directly per pixel.
double oracle_window(int x, int n, int grid_p, int i) {
    const int hop = n / grid_p;
    const int len = 2 * hop;
    double v = 0.0;
    for (int period = 0; period * n < len + n; ++period) {
        const int t = ((x - i * hop) % n + n) % n + period * n;
        if (t < len) {
            const double s = std::sin(std::numbers::pi * t / len);
            v += s * s;
        }
    }
    return v;
}

RealField random_field(int w, int h, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    RealField f(w, h);
    for (double& v : f.samples()) v = dist(gen);
    return f;
}

}  // namespace

TEST_CASE("grid_p = 1 gives a single all-ones mask") {
    MaskSet set = make_masks(16, 16, 1);
    REQUIRE(set.count() == 1);
    REQUIRE(set.masks.size() == 1);
    for (double v : set.masks[0].samples()) CHECK(v == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("masks partition unity") {
    for (int p : {1, 2, 4, 8}) {
        MaskSet set = make_masks(64, 64, p);
        REQUIRE(static_cast<int>(set.masks.size()) == p * p);
        RealField sum(64, 64);
        for (const RealField& m : set.masks) {
            for (double v : m.samples()) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0 + 1e-12);
            }
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += m[i];
        }
        for (double v : sum.samples()) CHECK(std::abs(v - 1.0) <= 1e-6);
    }
}

TEST_CASE("8x8 grid_p 2 masks match the window oracle") {
    MaskSet set = make_masks(8, 8, 2);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
            const RealField& m = set.masks[static_cast<std::size_t>(j) * 2 + i];
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const double expect =
                        oracle_window(x, 8, 2, i) * oracle_window(y, 8, 2, j);
                    CHECK(m.at(x, y) == Catch::Approx(expect).margin(1e-12));
                }
        }
}

TEST_CASE("rectangular grids are supported") {
    MaskSet set = make_masks(24, 16, 4);
    RealField sum(24, 16);
    for (const RealField& m : set.masks)
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += m[i];
    for (double v : sum.samples()) CHECK(std::abs(v - 1.0) <= 1e-6);
}

TEST_CASE("mask gradients are apodized, not binary") {
    // Discrete gradient magnitude stays below 2 / tile for every mask.
    for (int p : {2, 4, 8}) {
        MaskSet set = make_masks(64, 64, p);
        const double bound = 2.0 / (64.0 / p);
        for (const RealField& m : set.masks) {
            double worst = 0.0;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) {
                    const double gx = m.at((x + 1) % 64, y) - m.at(x, y);
                    const double gy = m.at(x, (y + 1) % 64) - m.at(x, y);
                    worst = std::max(worst, std::sqrt(gx * gx + gy * gy));
                }
            CHECK(worst <= bound);
        }
    }
}

TEST_CASE("make_masks rejects bad configurations") {
    CHECK_THROWS_AS(make_masks(16, 16, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_masks(15, 16, 2), std::invalid_argument);   // not divisible
    CHECK_THROWS_AS(make_masks(16, 16, 8), std::invalid_argument);   // tile = 2 < 4
}

TEST_CASE("split_image with grid_p 1 is the identity") {
    RealField img = random_field(16, 16, 5);
    MaskSet set = make_masks(16, 16, 1);
    auto patches = split_image(img, set);
    REQUIRE(patches.size() == 1);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(patches[0][i] == Catch::Approx(img[i]).margin(1e-15));
}

TEST_CASE("patches sum back to the image") {
    RealField img = random_field(32, 32, 9);
    MaskSet set = make_masks(32, 32, 4);
    auto patches = split_image(img, set);
    RealField sum(32, 32);
    for (const RealField& p : patches)
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p[i];
    const double tol = 1e-6 * max_abs(img);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(sum[i] - img[i]) <= tol);
}

TEST_CASE("a delta image samples the masks pointwise") {
    RealField img(16, 16);
    img.at(5, 9) = 1.0;
    MaskSet set = make_masks(16, 16, 2);
    auto patches = split_image(img, set);
    for (std::size_t p = 0; p < patches.size(); ++p) {
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const double expect = (x == 5 && y == 9) ? set.masks[p].at(5, 9) : 0.0;
                CHECK(patches[p].at(x, y) == expect);
            }
    }
}

TEST_CASE("split_image rejects shape mismatch") {
    MaskSet set = make_masks(16, 16, 2);
    CHECK_THROWS_AS(split_image(RealField(8, 8), set), std::invalid_argument);
}

TEST_CASE("masking in space is spectral convolution") {
    // forward_fft(m .* i) = (1/N) * cyclic_convolve(M, I), bin by bin.
    RealField img = random_field(8, 8, 31);
    MaskSet set = make_masks(8, 8, 2);
    set.ensure_spectra();
    const ComplexField img_spec = forward_fft(img);
    const double n = 64.0;

    for (std::size_t p = 0; p < set.masks.size(); ++p) {
        RealField masked(8, 8);
        for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = set.masks[p][i] * img[i];
        const ComplexField lhs = forward_fft(masked);

        const ComplexField& mspec = set.spectra[p];
        ComplexField rhs(8, 8);
        for (int v = 0; v < 8; ++v)
            for (int u = 0; u < 8; ++u) {
                cplx acc(0.0, 0.0);
                for (int q = 0; q < 8; ++q)
                    for (int s = 0; s < 8; ++s)
                        acc += mspec.at(s, q) * img_spec.at((u - s + 8) % 8, (v - q + 8) % 8);
                rhs.at(u, v) = acc / n;
            }

        for (std::size_t i = 0; i < lhs.size(); ++i)
            CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-9 * std::max(1.0, std::abs(rhs[i])));
    }
}

TEST_CASE("ensure_spectra caches one spectrum per mask") {
    MaskSet set = make_masks(16, 16, 2);
    CHECK(set.spectra.empty());
    set.ensure_spectra();
    CHECK(set.spectra.size() == set.masks.size());
    set.ensure_spectra();  // second call must not duplicate
    CHECK(set.spectra.size() == set.masks.size());
}
