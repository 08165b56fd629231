#pragma once

#include <bit>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sftip/field.hpp"

namespace sftip {

// Discrete Fourier transform pair used throughout:
//   forward:  F(k) = sum_x f(x) exp(-2*pi*i*k*x/n)      (unnormalized)
//   inverse:  f(x) = (1/N) sum_k F(k) exp(+2*pi*i*k*x/n)
// so inverse_fft(forward_fft(f)) == f and the convolution theorem holds
// with no extra factors. Power-of-two lengths go through an iterative
// radix-2 kernel; everything else through Bluestein's chirp-z, so arbitrary
// sizes are supported natively. No planner, no global state: transforms are
// bit-reproducible.

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

// tw[k] = exp(-2*pi*i*k/n) for k < n/2
inline std::vector<cplx> twiddles(std::size_t n) {
    std::vector<cplx> tw(n / 2);
    const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t k = 0; k < n / 2; ++k)
        tw[k] = std::polar(1.0, step * static_cast<double>(k));
    return tw;
}

// In-place radix-2 DIT, forward direction, length = a.size() = power of two.
inline void fft_pow2(std::vector<cplx>& a, const std::vector<cplx>& tw) {
    const std::size_t n = a.size();
    if (n < 2) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * tw[k * step];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

// Scratch space reused across the row/column passes of one 2D transform.
struct LineTransform {
    explicit LineTransform(std::size_t n) : n_(n) {
        if (is_pow2(n_)) {
            tw_ = twiddles(n_);
            return;
        }
        // Bluestein: convolve the chirp-premultiplied input with the
        // conjugate chirp on a power-of-two grid of length m >= 2n-1.
        m_ = next_pow2(2 * n_ - 1);
        tw_ = twiddles(m_);
        chirp_.resize(n_);
        const std::int64_t two_n = 2 * static_cast<std::int64_t>(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            // angle = -pi*k^2/n, argument reduced mod 2n before the division
            const std::int64_t q = (static_cast<std::int64_t>(k) * static_cast<std::int64_t>(k)) % two_n;
            chirp_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(q) / static_cast<double>(n_));
        }
        bhat_.assign(m_, cplx{});
        for (std::size_t k = 0; k < n_; ++k) {
            bhat_[k] = std::conj(chirp_[k]);
            if (k != 0) bhat_[m_ - k] = std::conj(chirp_[k]);
        }
        fft_pow2(bhat_, tw_);
        work_.resize(m_);
    }

    // forward DFT of a (length n), in place
    void forward(std::vector<cplx>& a) {
        if (m_ == 0) {
            fft_pow2(a, tw_);
            return;
        }
        std::fill(work_.begin(), work_.end(), cplx{});
        for (std::size_t k = 0; k < n_; ++k) work_[k] = a[k] * chirp_[k];
        fft_pow2(work_, tw_);
        for (std::size_t k = 0; k < m_; ++k) work_[k] *= bhat_[k];
        // inverse pow2 transform via conjugation
        for (auto& v : work_) v = std::conj(v);
        fft_pow2(work_, tw_);
        const double inv_m = 1.0 / static_cast<double>(m_);
        for (std::size_t k = 0; k < n_; ++k)
            a[k] = chirp_[k] * std::conj(work_[k]) * inv_m;
    }

private:
    std::size_t n_;
    std::size_t m_ = 0;  // 0 when n is a power of two
    std::vector<cplx> tw_;
    std::vector<cplx> chirp_;
    std::vector<cplx> bhat_;
    std::vector<cplx> work_;
};

// Forward 2D DFT, rows then columns.
inline void fft2d_forward(ComplexField& f) {
    const int w = f.width(), h = f.height();
    auto& s = f.samples();

    LineTransform row(static_cast<std::size_t>(w));
    std::vector<cplx> line(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        auto* base = s.data() + static_cast<std::size_t>(y) * w;
        line.assign(base, base + w);
        row.forward(line);
        std::copy(line.begin(), line.end(), base);
    }

    LineTransform col(static_cast<std::size_t>(h));
    std::vector<cplx> cline(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) cline[y] = s[static_cast<std::size_t>(y) * w + x];
        col.forward(cline);
        for (int y = 0; y < h; ++y) s[static_cast<std::size_t>(y) * w + x] = cline[y];
    }
}

}  // namespace detail

/// Unnormalized 2D DFT.
inline ComplexField forward_fft(const ComplexField& field) {
    ComplexField out = field;
    detail::fft2d_forward(out);
    return out;
}

inline ComplexField forward_fft(const RealField& field) {
    ComplexField out = to_complex(field);
    detail::fft2d_forward(out);
    return out;
}

/// Exact inverse of forward_fft; the 1/N normalization lives here.
inline ComplexField inverse_fft(const ComplexField& spectrum) {
    ComplexField out(spectrum.width(), spectrum.height());
    const double inv_n = 1.0 / static_cast<double>(spectrum.size());
    for (std::size_t i = 0; i < spectrum.size(); ++i) out[i] = std::conj(spectrum[i]);
    detail::fft2d_forward(out);
    for (auto& v : out.samples()) v = std::conj(v) * inv_n;
    return out;
}

/// Real part of a complex field; throws if the imaginary residue exceeds
/// 1e-9 of the result magnitude (a symptom of a transform bug, not a value
/// to be silently discarded).
inline RealField real_part_checked(const ComplexField& f, const char* what = "real_part_checked") {
    double max_re = 0.0, max_im = 0.0;
    for (const cplx& v : f.samples()) {
        max_re = std::max(max_re, std::abs(v.real()));
        max_im = std::max(max_im, std::abs(v.imag()));
    }
    if (max_im > 1e-9 * std::max(max_re, 1e-300))
        throw std::runtime_error(std::string(what) + ": imaginary residue above 1e-9 of magnitude");
    RealField out(f.width(), f.height());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].real();
    return out;
}

/// Cyclic convolution via the spectral product.
inline RealField circular_convolve(const RealField& a, const RealField& b) {
    require_same_shape(a, b, "circular_convolve");
    ComplexField fa = forward_fft(a);
    const ComplexField fb = forward_fft(b);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    return real_part_checked(inverse_fft(fa), "circular_convolve");
}

inline double spectrum_energy(const ComplexField& f) {
    double s = 0.0;
    for (const cplx& v : f.samples()) s += std::norm(v);
    return s;
}

}  // namespace sftip
