#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sftip/fft.hpp"
#include "sftip/field.hpp"
#include "sftip/rng.hpp"

namespace sftip {

/// Wavefront description: Zernike coefficients in radians, indexed from
/// j = 1 (piston) in Noll order, over a circular aperture whose radius is
/// a fraction of the grid half-width.
struct AberrationSpec {
    std::vector<double> coefficients;
    double pupil_radius_fraction = 0.5;

    void validate() const {
        if (coefficients.size() > 64)
            throw std::invalid_argument("AberrationSpec: at most 64 coefficients");
        if (!(pupil_radius_fraction > 0.0) || pupil_radius_fraction > 1.0)
            throw std::invalid_argument("AberrationSpec: pupil_radius_fraction must be in (0, 1]");
    }
};

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
}

// Noll single index -> (n, m, use_sine). Within each radial order the
// azimuthal frequencies ascend pairwise; even j takes the cosine term,
// odd j the sine term.
inline void noll_to_nm(int j, int& n, int& m, bool& use_sine) {
    n = 0;
    int rem = j;
    while (rem > n + 1) {
        rem -= n + 1;
        ++n;
    }
    const int j1 = rem - 1;
    m = (n % 2 == 1) ? 1 + 2 * (j1 / 2) : 2 * ((j1 + 1) / 2);
    use_sine = (j % 2 == 1) && m != 0;
}

inline double zernike_radial(int n, int m, double rho) {
    double r = 0.0;
    for (int s = 0; s <= (n - m) / 2; ++s) {
        const double c = ((s % 2 == 0) ? 1.0 : -1.0) * factorial(n - s) /
                         (factorial(s) * factorial((n + m) / 2 - s) * factorial((n - m) / 2 - s));
        r += c * std::pow(rho, n - 2 * s);
    }
    return r;
}

}  // namespace detail

/// Noll-normalized Zernike polynomial Z_j evaluated at polar (rho, theta).
inline double zernike_noll(int j, double rho, double theta) {
    if (j < 1) throw std::invalid_argument("zernike_noll: index must be >= 1");
    if (!(rho >= 0.0) || rho > 1.0)
        throw std::invalid_argument("zernike_noll: rho must be in [0, 1]");
    int n = 0, m = 0;
    bool use_sine = false;
    detail::noll_to_nm(j, n, m, use_sine);
    const double norm = (m == 0) ? std::sqrt(n + 1.0) : std::sqrt(2.0 * (n + 1.0));
    const double radial = detail::zernike_radial(n, m, rho);
    if (m == 0) return norm * radial;
    return norm * radial * (use_sine ? std::sin(m * theta) : std::cos(m * theta));
}

/// Generalized pupil function on a width x height grid: the aperture disk
/// carries exp(i * phase), everything outside is zero. The disk is centered
/// on the grid center; its radius is pupil_radius_fraction of the shorter
/// half-width.
inline ComplexField make_pupil(const AberrationSpec& aberration, int width, int height) {
    aberration.validate();
    ComplexField pupil(width, height);
    const double cx = width / 2.0, cy = height / 2.0;
    const double radius = aberration.pupil_radius_fraction * (std::min(width, height) / 2.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double rho = std::sqrt(dx * dx + dy * dy) / radius;
            if (rho > 1.0) continue;
            const double theta = std::atan2(dy, dx);
            double phase = 0.0;
            for (std::size_t k = 0; k < aberration.coefficients.size(); ++k)
                phase += aberration.coefficients[k] *
                         zernike_noll(static_cast<int>(k) + 1, rho, theta);
            pupil.at(x, y) = std::polar(1.0, phase);
        }
    return pupil;
}

/// PSF = |FFT(pupil)|^2, shifted so the circular centroid sits at the grid
/// center, normalized to unit sum.
inline RealField psf_from_pupil(const ComplexField& pupil) {
    const ComplexField amp = forward_fft(pupil);
    RealField psf(pupil.width(), pupil.height());
    double total = 0.0;
    for (std::size_t i = 0; i < psf.size(); ++i) {
        psf[i] = std::norm(amp[i]);
        total += psf[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("psf_from_pupil: all-zero pupil");
    psf = recenter_to(psf, pupil.width() / 2, pupil.height() / 2);
    for (std::size_t i = 0; i < psf.size(); ++i) psf[i] /= total;
    return psf;
}

/// Random wavefront: coefficients c_2 .. c_{mode_count+1} drawn iid
/// normal(0, sigma^2); piston is fixed at zero (it never reaches the image).
/// The same seed always yields the same spec.
inline AberrationSpec random_aberration(int mode_count, double sigma, std::uint64_t seed) {
    if (mode_count < 1) throw std::invalid_argument("random_aberration: mode_count must be >= 1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("random_aberration: sigma must be >= 0");
    AberrationSpec spec;
    spec.coefficients.assign(static_cast<std::size_t>(mode_count) + 1, 0.0);
    NormalSampler sampler(mix_seed(seed, 0x6162657272ULL));  // aberration stream
    for (int k = 1; k <= mode_count; ++k) spec.coefficients[k] = sigma * sampler.next();
    spec.validate();
    return spec;
}

/// Forward model: blur the scene with the kernel (circular convolution, the
/// kernel taken exactly as given), add white Gaussian noise, clip negatives,
/// and quantize to 16-bit levels. noise_sigma = 0 skips the noise draw
/// entirely, so the result is then independent of the seed.
inline RealField simulate_observation(const RealField& scene, const RealField& psf,
                                      double noise_sigma, std::uint64_t seed) {
    require_same_shape(scene, psf, "simulate_observation");
    if (!(noise_sigma >= 0.0))
        throw std::invalid_argument("simulate_observation: noise_sigma must be >= 0");
    double psum = 0.0;
    for (double v : psf.samples()) {
        if (v < 0.0) throw std::invalid_argument("simulate_observation: psf must be non-negative");
        psum += v;
    }
    if (std::abs(psum - 1.0) > 1e-6)
        throw std::invalid_argument("simulate_observation: psf must sum to 1");

    RealField image = circular_convolve(psf, scene);
    if (noise_sigma > 0.0) {
        NormalSampler sampler(mix_seed(seed, 0x6e6f697365ULL));  // noise stream
        for (std::size_t i = 0; i < image.size(); ++i) image[i] += noise_sigma * sampler.next();
    }
    for (std::size_t i = 0; i < image.size(); ++i) image[i] = std::max(0.0, image[i]);
    return quantize_16bit(image);
}

enum class SceneKind { bar_target, checkerboard, flat };

namespace detail {

// Resolution-target generator: horizontal bands of bar groups, periods
// 2..16 px, vertical bars on the left half and horizontal bars on the
// right, plus a solid block and border for low-frequency content.
inline RealField bar_target_scene(int width, int height) {
    RealField s(width, height);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.05;

    constexpr int kPeriods[] = {2, 4, 8, 12, 16};
    constexpr int kGroups = 5;
    const int band = height / (kGroups + 1);
    const int margin = std::max(1, width / 16);
    const int bar_h = std::max(1, band - std::max(1, band / 4));
    const int half = width / 2;

    for (int g = 0; g < kGroups; ++g) {
        const int period = kPeriods[g];
        const int on = std::max(1, period / 2);
        const int y0 = band / 2 + g * band;
        for (int y = y0; y < std::min(height, y0 + bar_h); ++y) {
            for (int x = margin; x < half - margin; ++x)
                s.at(x, y) = ((x - margin) / on) % 2 == 0 ? 0.95 : 0.05;
            for (int x = half + margin; x < width - margin; ++x)
                s.at(x, y) = ((y - y0) / on) % 2 == 0 ? 0.95 : 0.05;
        }
    }

    // Solid block in the lower-right corner region: strong DC and edges.
    const int bs = std::max(2, std::min(width, height) / 8);
    for (int y = height - margin - bs; y < height - margin && y >= 0; ++y)
        for (int x = width - margin - bs; x < width - margin && x >= 0; ++x) s.at(x, y) = 1.0;

    // Thin bright frame one margin in from the edge.
    for (int x = 0; x < width; ++x) {
        s.at(x, 0) = 0.85;
        s.at(x, height - 1) = 0.85;
    }
    for (int y = 0; y < height; ++y) {
        s.at(0, y) = 0.85;
        s.at(width - 1, y) = 0.85;
    }
    return s;
}

}  // namespace detail

/// Deterministic synthetic scenes, values in [0, 1].
inline RealField make_test_scene(SceneKind kind, int width, int height) {
    switch (kind) {
        case SceneKind::flat: {
            RealField s(width, height);
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0;
            return s;
        }
        case SceneKind::checkerboard: {
            RealField s(width, height);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) s.at(x, y) = ((x / 8 + y / 8) % 2 == 0) ? 1.0 : 0.0;
            return s;
        }
        case SceneKind::bar_target:
            return detail::bar_target_scene(width, height);
    }
    throw std::invalid_argument("make_test_scene: unknown scene kind");
}

inline SceneKind scene_kind_from_name(const std::string& name) {
    if (name == "bar-target" || name == "bar_target") return SceneKind::bar_target;
    if (name == "checkerboard") return SceneKind::checkerboard;
    if (name == "flat") return SceneKind::flat;
    throw std::invalid_argument("unknown scene kind: " + name);
}

/// One benchmark case: the ground truth pair and the observation derived
/// from them. `image` is exactly regenerable from (scene, aberration).
struct ConvergenceScenario {
    RealField scene;
    AberrationSpec aberration;
    RealField psf;
    RealField image;

    ConvergenceScenario(int width, int height)
        : scene(width, height), psf(width, height), image(width, height) {}
};

/// Build the standard scenario: bar-target scene, random wavefront over
/// `mode_count` modes, diffraction PSF from the aberrated pupil, noiseless
/// 16-bit observation.
inline ConvergenceScenario make_scenario(int width, int height, int mode_count, double sigma,
                                         std::uint64_t seed) {
    ConvergenceScenario sc(width, height);
    sc.scene = make_test_scene(SceneKind::bar_target, width, height);
    sc.aberration = random_aberration(mode_count, sigma, seed);
    sc.psf = psf_from_pupil(make_pupil(sc.aberration, width, height));
    sc.image = simulate_observation(sc.scene, sc.psf, 0.0, seed);
    return sc;
}

}  // namespace sftip
