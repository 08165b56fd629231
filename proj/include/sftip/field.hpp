#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace sftip {

using cplx = std::complex<double>;

/// 2D grid of samples in row-major order. Immutable-by-convention value type:
/// operations return new fields rather than mutating shared ones.
template <typename T>
class Field {
public:
    Field(int width, int height)
        : width_(width), height_(height) {
        check_dims(width, height);
        samples_.assign(static_cast<std::size_t>(width) * height, T{});
    }

    Field(int width, int height, std::vector<T> samples)
        : width_(width), height_(height), samples_(std::move(samples)) {
        check_dims(width, height);
        if (samples_.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("Field: sample count does not match width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return samples_.size(); }

    T& at(int x, int y) { return samples_[idx(x, y)]; }
    const T& at(int x, int y) const { return samples_[idx(x, y)]; }

    T& operator[](std::size_t i) { return samples_[i]; }
    const T& operator[](std::size_t i) const { return samples_[i]; }

    std::vector<T>& samples() { return samples_; }
    const std::vector<T>& samples() const { return samples_; }

    bool same_shape(int w, int h) const { return width_ == w && height_ == h; }

    template <typename U>
    bool same_shape(const Field<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

private:
    static void check_dims(int w, int h) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("Field: width and height must be >= 1");
    }

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_;
    int height_;
    std::vector<T> samples_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

template <typename A, typename B>
inline void require_same_shape(const Field<A>& a, const Field<B>& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

inline bool all_finite(const RealField& f) {
    for (double v : f.samples())
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(const ComplexField& f) {
    for (const cplx& v : f.samples())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

inline double field_sum(const RealField& f) {
    double s = 0.0;
    for (double v : f.samples()) s += v;
    return s;
}

inline double field_max(const RealField& f) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : f.samples()) m = std::max(m, v);
    return m;
}

inline double max_abs(const RealField& f) {
    double m = 0.0;
    for (double v : f.samples()) m = std::max(m, std::abs(v));
    return m;
}

inline double l2_norm(const RealField& f) {
    double s = 0.0;
    for (double v : f.samples()) s += v * v;
    return std::sqrt(s);
}

inline ComplexField to_complex(const RealField& f) {
    ComplexField out(f.width(), f.height());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = cplx(f[i], 0.0);
    return out;
}

/// Toroidal translation: out(x, y) = f((x - dx) mod w, (y - dy) mod h).
/// A delta at the origin shifted by (dx, dy) lands at (dx, dy).
template <typename T>
Field<T> circular_shift(const Field<T>& f, int dx, int dy) {
    const int w = f.width(), h = f.height();
    auto wrap = [](int v, int n) {
        v %= n;
        return v < 0 ? v + n : v;
    };
    dx = wrap(dx, w);
    dy = wrap(dy, h);
    if (dx == 0 && dy == 0) return f;
    Field<T> out(w, h);
    for (int y = 0; y < h; ++y) {
        const int sy = wrap(y - dy, h);
        for (int x = 0; x < w; ++x)
            out.at(x, y) = f.at(wrap(x - dx, w), sy);
    }
    return out;
}

/// Center of mass on the torus via the phase of the first Fourier coefficient
/// per axis (the circular mean). Robust to mass wrapping across the border.
/// Zero resultant on an axis (fully symmetric mass) yields 0 for that axis.
inline std::pair<int, int> circular_centroid(const RealField& f) {
    const int w = f.width(), h = f.height();
    const double tau = 2.0 * std::numbers::pi;
    cplx cx(0.0, 0.0), cy(0.0, 0.0);
    double total = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = f.at(x, y);
            total += std::abs(v);
            cx += v * std::polar(1.0, tau * x / w);
            cy += v * std::polar(1.0, tau * y / h);
        }
    auto to_index = [](const cplx& c, int n, double total_mass) {
        if (std::abs(c) < 1e-12 * std::max(total_mass, 1e-300)) return 0;
        const double ang = std::arg(c);  // (-pi, pi]
        int k = static_cast<int>(std::lround(ang * n / (2.0 * std::numbers::pi)));
        k %= n;
        return k < 0 ? k + n : k;
    };
    return {to_index(cx, w, total), to_index(cy, h, total)};
}

/// Shift f so its circular centroid lands on (cx, cy).
inline RealField recenter_to(const RealField& f, int cx, int cy) {
    auto [mx, my] = circular_centroid(f);
    return circular_shift(f, cx - mx, cy - my);
}

/// Linear rescale of [0, max] to the 16-bit integer grid [0, 65535],
/// round half up. All-zero input stays all-zero. Idempotent on its own
/// output up to the (identity) rescale.
inline RealField quantize_16bit(const RealField& f) {
    for (double v : f.samples()) {
        if (!std::isfinite(v)) throw std::invalid_argument("quantize_16bit: non-finite sample");
        if (v < 0.0) throw std::invalid_argument("quantize_16bit: negative sample (clip first)");
    }
    const double m = field_max(f);
    RealField out(f.width(), f.height());
    if (m <= 0.0) return out;
    const double scale = 65535.0 / m;
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = std::floor(f[i] * scale + 0.5);
    return out;
}

}  // namespace sftip
