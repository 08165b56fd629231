#pragma once

#include <numbers>
#include <stdexcept>
#include <vector>

#include "sftip/fft.hpp"
#include "sftip/field.hpp"

namespace sftip {

/// The grid_p x grid_p apodized masks that turn one frame into pseudo-frames.
/// Invariants: every sample in [0, 1]; the masks sum to 1 at every pixel.
struct MaskSet {
    int grid_p = 1;
    std::vector<RealField> masks;       // grid_p^2 fields, image-sized
    std::vector<ComplexField> spectra;  // cached forward transforms, optional

    int count() const { return grid_p * grid_p; }

    void ensure_spectra() {
        if (!spectra.empty()) return;
        spectra.reserve(masks.size());
        for (const RealField& m : masks) spectra.push_back(forward_fft(m));
    }
};

namespace detail {

// Periodic raised-cosine window bank: grid_p hops of size n/grid_p, window
// length two hops, folded onto the length-n torus. sin^2 + cos^2 at
// half-overlap makes the bank sum to exactly 1 (constant overlap-add);
// grid_p = 1 degenerates to a single all-ones window by the same fold.
inline std::vector<std::vector<double>> window_bank_1d(int n, int grid_p) {
    const int hop = n / grid_p;
    const int len = 2 * hop;
    std::vector<std::vector<double>> bank(grid_p, std::vector<double>(n, 0.0));
    for (int i = 0; i < grid_p; ++i) {
        for (int x = 0; x < n; ++x) {
            int off = (x - i * hop) % n;
            if (off < 0) off += n;
            double v = 0.0;
            for (int t = off; t < len; t += n) {
                const double s = std::sin(std::numbers::pi * t / len);
                v += s * s;
            }
            bank[i][x] = v;
        }
    }
    return bank;
}

}  // namespace detail

/// Separable Hann windows on a half-overlapping toroidal tile grid.
/// Deterministic; partition of unity by construction.
inline MaskSet make_masks(int width, int height, int grid_p) {
    if (grid_p < 1) throw std::invalid_argument("make_masks: grid_p must be >= 1");
    if (width < 1 || height < 1) throw std::invalid_argument("make_masks: empty grid");
    if (width % grid_p != 0 || height % grid_p != 0)
        throw std::invalid_argument("make_masks: width and height must be divisible by grid_p (pad upstream)");
    if (width / grid_p < 4 || height / grid_p < 4)
        throw std::invalid_argument("make_masks: tile smaller than 4 pixels");

    const auto wx = detail::window_bank_1d(width, grid_p);
    const auto wy = detail::window_bank_1d(height, grid_p);

    MaskSet set;
    set.grid_p = grid_p;
    set.masks.reserve(static_cast<std::size_t>(grid_p) * grid_p);
    for (int j = 0; j < grid_p; ++j) {
        for (int i = 0; i < grid_p; ++i) {
            RealField m(width, height);
            for (int y = 0; y < height; ++y) {
                const double vy = wy[j][y];
                for (int x = 0; x < width; ++x)
                    m.at(x, y) = wx[i][x] * vy;
            }
            set.masks.push_back(std::move(m));
        }
    }
    return set;
}

/// Pseudo-patches i_p = m_p .* i. Their sum reconstructs i.
inline std::vector<RealField> split_image(const RealField& image, const MaskSet& masks) {
    if (masks.masks.empty()) throw std::invalid_argument("split_image: empty mask set");
    require_same_shape(image, masks.masks.front(), "split_image");
    std::vector<RealField> patches;
    patches.reserve(masks.masks.size());
    for (const RealField& m : masks.masks) {
        RealField p(image.width(), image.height());
        for (std::size_t k = 0; k < image.size(); ++k) p[k] = m[k] * image[k];
        patches.push_back(std::move(p));
    }
    return patches;
}

}  // namespace sftip
