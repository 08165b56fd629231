#pragma once

#include <stdexcept>
#include <vector>

#include "sftip/field.hpp"
#include "sftip/masks.hpp"

namespace sftip {

/// Allowed PSF region: a size_s x size_s square toroidally centered on the
/// field origin (the in-flight kernel gauge; kernels at rest are displayed
/// at the grid center).
struct SupportSpec {
    int size_s = 32;

    void validate(int width, int height) const {
        if (size_s < 1 || size_s > std::min(width, height))
            throw std::invalid_argument("SupportSpec: size_s must be in [1, min(width, height)]");
    }
};

/// Realness + non-negativity projection: real part, negatives clipped.
inline RealField project_nonneg_real(const ComplexField& field) {
    RealField out(field.width(), field.height());
    for (std::size_t i = 0; i < field.size(); ++i)
        out[i] = std::max(0.0, field[i].real());
    return out;
}

inline RealField clip_nonneg(const RealField& field) {
    RealField out = field;
    for (double& v : out.samples()) v = std::max(0.0, v);
    return out;
}

namespace detail {

// True when pixel x lies inside the toroidal window of side s centered on 0.
inline bool in_support_1d(int x, int n, int s) {
    return (x + s / 2) % n < s;
}

}  // namespace detail

/// Finite-support + normalization projection: zero outside the centered
/// window, rescale to unit sum. A zeroed-out PSF falls back to a delta at
/// the window center rather than failing mid-iteration; the caller counts
/// the event via `fell_back`.
inline RealField project_psf_support(const RealField& psf, const SupportSpec& support,
                                     bool* fell_back = nullptr) {
    const int w = psf.width(), h = psf.height();
    support.validate(w, h);
    const int s = support.size_s;
    if (fell_back) *fell_back = false;

    RealField out(w, h);
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
        if (!detail::in_support_1d(y, h, s)) continue;
        for (int x = 0; x < w; ++x) {
            if (!detail::in_support_1d(x, w, s)) continue;
            const double v = psf.at(x, y);
            out.at(x, y) = v;
            sum += v;
        }
    }
    if (sum <= 0.0) {
        RealField delta(w, h);
        delta.at(0, 0) = 1.0;
        if (fell_back) *fell_back = true;
        return delta;
    }
    const double inv = 1.0 / sum;
    for (double& v : out.samples()) v *= inv;
    return out;
}

/// Object-side projection: fuse the patches, clip negatives, re-split
/// through the masks. The fused sum of the output equals the clipped fused
/// sum of the input (partition of unity).
inline std::vector<RealField> project_object_support(const std::vector<RealField>& patches,
                                                     const MaskSet& masks) {
    if (patches.size() != masks.masks.size())
        throw std::invalid_argument("project_object_support: patch/mask count mismatch");
    if (patches.empty()) throw std::invalid_argument("project_object_support: empty input");
    for (const RealField& p : patches)
        require_same_shape(p, masks.masks.front(), "project_object_support");

    RealField fused(patches.front().width(), patches.front().height());
    for (const RealField& p : patches)
        for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += p[i];
    for (double& v : fused.samples()) v = std::max(0.0, v);

    return split_image(fused, masks);
}

}  // namespace sftip
