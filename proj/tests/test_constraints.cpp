#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sftip/constraints.hpp"

using namespace sftip;

namespace {

RealField random_field(int w, int h, unsigned seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    RealField f(w, h);
    for (double& v : f.samples()) v = dist(gen);
    return f;
}

ComplexField random_complex(int w, int h, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ComplexField f(w, h);
    for (cplx& v : f.samples()) v = cplx(dist(gen), dist(gen));
    return f;
}

}  // namespace

TEST_CASE("project_nonneg_real basics") {
    SECTION("non-negative real input is a fixed point") {
        RealField f = random_field(8, 8, 1, 0.0, 2.0);
        RealField out = project_nonneg_real(to_complex(f));
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(out[i] == f[i]);
    }
    SECTION("all negative clips to zero") {
        ComplexField f(4, 4);
        for (cplx& v : f.samples()) v = cplx(-1.0, 0.3);
        RealField out = project_nonneg_real(f);
        for (double v : out.samples()) CHECK(v == 0.0);
    }
    SECTION("takes the real part") {
        ComplexField f(2, 2);
        f.at(1, 0) = cplx(3.0, -4.0);
        CHECK(project_nonneg_real(f).at(1, 0) == 3.0);
    }
}

TEST_CASE("support window membership") {
    SupportSpec spec{4};
    // s = 4 on n = 8 keeps {-2, -1, 0, 1} around the origin, torus-wrapped.
    RealField f(8, 8);
    for (double& v : f.samples()) v = 1.0 / 64.0;
    RealField out = project_psf_support(f, spec);
    double sum = 0.0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const bool in_x = (x <= 1 || x >= 6);
            const bool in_y = (y <= 1 || y >= 6);
            if (in_x && in_y)
                CHECK(out.at(x, y) == Catch::Approx(1.0 / 16.0).margin(1e-15));
            else
                CHECK(out.at(x, y) == 0.0);
            sum += out.at(x, y);
        }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("delta at the origin is a support fixed point") {
    RealField f(8, 8);
    f.at(0, 0) = 1.0;
    for (int s : {1, 3, 8}) {
        RealField out = project_psf_support(f, SupportSpec{s});
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(out[i] == f[i]);
    }
}

TEST_CASE("full-width support only renormalizes") {
    RealField f = random_field(8, 8, 2, 0.0, 1.0);
    const double sum = field_sum(f);
    RealField out = project_psf_support(f, SupportSpec{8});
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(out[i] == Catch::Approx(f[i] / sum).margin(1e-15));
}

TEST_CASE("empty support falls back to a delta") {
    RealField zero(8, 8);
    bool fell_back = false;
    RealField out = project_psf_support(zero, SupportSpec{4}, &fell_back);
    CHECK(fell_back);
    CHECK(out.at(0, 0) == 1.0);
    CHECK(field_sum(out) == 1.0);

    // Mass entirely outside the window triggers the same fallback.
    RealField outside(8, 8);
    outside.at(4, 4) = 1.0;
    out = project_psf_support(outside, SupportSpec{2}, &fell_back);
    CHECK(fell_back);
    CHECK(out.at(0, 0) == 1.0);
}

TEST_CASE("support spec validates its size") {
    CHECK_THROWS_AS(project_psf_support(RealField(8, 8), SupportSpec{0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(project_psf_support(RealField(8, 8), SupportSpec{9}),
                    std::invalid_argument);
}

TEST_CASE("projections are idempotent") {
    for (unsigned seed = 0; seed < 100; ++seed) {
        const ComplexField raw = random_complex(8, 8, 1000 + seed);

        const RealField p1 = project_nonneg_real(raw);
        const RealField p1_again = project_nonneg_real(to_complex(p1));
        for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1_again[i] == p1[i]);

        const RealField s1 = project_psf_support(p1, SupportSpec{4});
        const RealField s2 = project_psf_support(s1, SupportSpec{4});
        for (std::size_t i = 0; i < s1.size(); ++i)
            CHECK(std::abs(s2[i] - s1[i]) <= 1e-12);
        CHECK(std::abs(field_sum(s1) - 1.0) <= 1e-12);

        MaskSet masks = make_masks(8, 8, 2);
        std::vector<RealField> patches;
        for (int p = 0; p < 4; ++p) patches.push_back(random_field(8, 8, 2000 + seed * 4 + p));
        const auto o1 = project_object_support(patches, masks);
        const auto o2 = project_object_support(o1, masks);
        for (std::size_t p = 0; p < o1.size(); ++p)
            for (std::size_t i = 0; i < o1[p].size(); ++i)
                CHECK(std::abs(o2[p][i] - o1[p][i]) <= 1e-12);
    }
}

TEST_CASE("object projection fuses, clips, and re-masks") {
    MaskSet masks = make_masks(8, 8, 2);

    SECTION("masked non-negative object is a fixed point") {
        RealField obj = random_field(8, 8, 3, 0.0, 1.0);
        auto patches = split_image(obj, masks);
        auto out = project_object_support(patches, masks);
        for (std::size_t p = 0; p < out.size(); ++p)
            for (std::size_t i = 0; i < out[p].size(); ++i)
                CHECK(out[p][i] == Catch::Approx(patches[p][i]).margin(1e-12));
    }

    SECTION("all-zero patches stay zero") {
        std::vector<RealField> zeros(4, RealField(8, 8));
        auto out = project_object_support(zeros, masks);
        for (const RealField& p : out)
            for (double v : p.samples()) CHECK(v == 0.0);
    }

    SECTION("negative region matches the per-pixel oracle") {
        std::vector<RealField> patches;
        for (int p = 0; p < 4; ++p) patches.push_back(random_field(8, 8, 40 + p));
        auto out = project_object_support(patches, masks);

        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                double fused = 0.0;
                for (const RealField& p : patches) fused += p.at(x, y);
                fused = std::max(0.0, fused);
                for (std::size_t p = 0; p < out.size(); ++p)
                    CHECK(out[p].at(x, y) ==
                          Catch::Approx(masks.masks[p].at(x, y) * fused).margin(1e-12));
            }
    }

    SECTION("output patch is bounded by its mask times the fused peak") {
        std::vector<RealField> patches;
        for (int p = 0; p < 4; ++p) patches.push_back(random_field(8, 8, 50 + p));
        auto out = project_object_support(patches, masks);
        RealField fused(8, 8);
        for (const RealField& p : out)
            for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += p[i];
        const double peak = field_max(fused);
        for (std::size_t p = 0; p < out.size(); ++p)
            for (std::size_t i = 0; i < out[p].size(); ++i)
                CHECK(out[p][i] <= masks.masks[p][i] * peak + 1e-12);
    }

    SECTION("count mismatch is rejected") {
        std::vector<RealField> three(3, RealField(8, 8));
        CHECK_THROWS_AS(project_object_support(three, masks), std::invalid_argument);
    }
}

TEST_CASE("clip is non-expansive") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        RealField a = random_field(8, 8, 300 + seed);
        RealField b = random_field(8, 8, 400 + seed);
        double clipped = 0.0, raw = 0.0;
        const RealField ca = clip_nonneg(a), cb = clip_nonneg(b);
        for (std::size_t i = 0; i < a.size(); ++i) {
            clipped += (ca[i] - cb[i]) * (ca[i] - cb[i]);
            raw += (a[i] - b[i]) * (a[i] - b[i]);
        }
        CHECK(clipped <= raw + 1e-15);
    }
}
