#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sftip/constraints.hpp"
#include "sftip/fft.hpp"
#include "sftip/field.hpp"
#include "sftip/masks.hpp"
#include "sftip/metrics.hpp"

namespace sftip {

/// Solver hyperparameters. eps_h/eps_o are *relative* Tikhonov floors:
/// each iteration they are scaled by the mean unregularized denominator
/// over frequency bins (falling back to the raw value when that mean is
/// zero), so the guard tracks the spectra's magnitude. The seed is carried
/// for manifest reproducibility; the solver itself has no randomized step.
struct TipConfig {
    int grid_p = 4;
    int support_s = 32;
    int iters = 100;
    double eps_h = 1e-3;
    double eps_o = 1e-3;
    std::uint64_t seed = 0;
    bool align_psnr = true;  // align the PSF estimate before trace PSNR

    void validate() const {
        if (grid_p < 1) throw std::invalid_argument("TipConfig: grid_p must be >= 1");
        if (support_s < 1) throw std::invalid_argument("TipConfig: support_s must be >= 1");
        if (iters < 1) throw std::invalid_argument("TipConfig: iters must be >= 1");
        if (!(eps_h > 0.0)) throw std::invalid_argument("TipConfig: eps_h must be > 0");
        if (!(eps_o > 0.0)) throw std::invalid_argument("TipConfig: eps_o must be > 0");
    }
};

/// Live solver state: current OTF (origin-gauge kernel spectrum) and the
/// grid_p^2 object patch spectra.
struct TipState {
    ComplexField otf;
    std::vector<ComplexField> patch_spectra;
    int iteration = 0;

    TipState(int width, int height) : otf(width, height) {}
};

struct TipResult {
    RealField psf;     // at rest: centroid at the grid center
    RealField object;  // same frame as the input image
    ConvergenceTrace trace;

    TipResult(int width, int height) : psf(width, height), object(width, height) {}
};

/// H = sum_p I_p conj(O_p) / (sum_p |O_p|^2 + eps), evaluated per bin.
inline ComplexField estimate_otf(const std::vector<ComplexField>& patch_image_spectra,
                                 const std::vector<ComplexField>& patch_object_spectra,
                                 double eps_h) {
    if (patch_image_spectra.empty())
        throw std::invalid_argument("estimate_otf: empty spectra list");
    if (patch_image_spectra.size() != patch_object_spectra.size())
        throw std::invalid_argument("estimate_otf: patch count mismatch");
    if (!(eps_h > 0.0)) throw std::invalid_argument("estimate_otf: eps_h must be > 0");

    const ComplexField& first = patch_image_spectra.front();
    ComplexField num(first.width(), first.height());
    RealField den(first.width(), first.height());
    for (std::size_t p = 0; p < patch_image_spectra.size(); ++p) {
        const ComplexField& ip = patch_image_spectra[p];
        const ComplexField& op = patch_object_spectra[p];
        require_same_shape(ip, first, "estimate_otf");
        require_same_shape(op, first, "estimate_otf");
        for (std::size_t i = 0; i < num.size(); ++i) {
            num[i] += ip[i] * std::conj(op[i]);
            den[i] += std::norm(op[i]);
        }
    }
    ComplexField otf(first.width(), first.height());
    for (std::size_t i = 0; i < otf.size(); ++i) otf[i] = num[i] / (den[i] + eps_h);
    return otf;
}

/// O_p = I_p conj(H) / (|H|^2 + eps), the regularized form of I_p / H.
inline std::vector<ComplexField> estimate_object_patches(
    const std::vector<ComplexField>& patch_image_spectra, const ComplexField& otf,
    double eps_o) {
    if (!(eps_o > 0.0)) throw std::invalid_argument("estimate_object_patches: eps_o must be > 0");
    std::vector<ComplexField> out;
    out.reserve(patch_image_spectra.size());
    for (const ComplexField& ip : patch_image_spectra) {
        require_same_shape(ip, otf, "estimate_object_patches");
        ComplexField op(otf.width(), otf.height());
        for (std::size_t i = 0; i < op.size(); ++i)
            op[i] = ip[i] * std::conj(otf[i]) / (std::norm(otf[i]) + eps_o);
        out.push_back(std::move(op));
    }
    return out;
}

/// Multi-frame Wiener filter:
/// O = sum_n I_n conj(H_n) / (sum_n |H_n|^2 + eps).
inline ComplexField mf_wiener_deconvolve(const std::vector<ComplexField>& image_spectra,
                                         const std::vector<ComplexField>& otfs, double eps) {
    if (image_spectra.empty()) throw std::invalid_argument("mf_wiener_deconvolve: empty input");
    if (image_spectra.size() != otfs.size())
        throw std::invalid_argument("mf_wiener_deconvolve: frame count mismatch");
    if (!(eps > 0.0)) throw std::invalid_argument("mf_wiener_deconvolve: eps must be > 0");

    const ComplexField& first = image_spectra.front();
    ComplexField num(first.width(), first.height());
    RealField den(first.width(), first.height());
    for (std::size_t n = 0; n < image_spectra.size(); ++n) {
        require_same_shape(image_spectra[n], first, "mf_wiener_deconvolve");
        require_same_shape(otfs[n], first, "mf_wiener_deconvolve");
        for (std::size_t i = 0; i < num.size(); ++i) {
            num[i] += image_spectra[n][i] * std::conj(otfs[n][i]);
            den[i] += std::norm(otfs[n][i]);
        }
    }
    ComplexField obj(first.width(), first.height());
    for (std::size_t i = 0; i < obj.size(); ++i) obj[i] = num[i] / (den[i] + eps);
    return obj;
}

/// || i - h * o ||_2 with cyclic convolution.
inline double residual_norm(const RealField& image, const RealField& psf,
                            const RealField& object) {
    require_same_shape(image, psf, "residual_norm");
    require_same_shape(image, object, "residual_norm");
    const RealField model = circular_convolve(psf, object);
    double s = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double d = image[i] - model[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace detail {

inline double mean_sq_spectrum(const RealField& den) {
    double s = 0.0;
    for (double v : den.samples()) s += v;
    return s / static_cast<double>(den.size());
}

// Best-shift PSNR between a ground-truth PSF and an estimate, computed from
// cached spectra: the correlation argmax minimizes the MSE over all toroidal
// shifts, so the aligned PSNR needs no spatial re-shift.
inline double aligned_psnr_from_spectra(const ComplexField& truth_spec, double truth_energy,
                                        const ComplexField& est_spec, double est_energy,
                                        std::size_t n) {
    ComplexField cross(truth_spec.width(), truth_spec.height());
    for (std::size_t i = 0; i < cross.size(); ++i)
        cross[i] = truth_spec[i] * std::conj(est_spec[i]);
    const ComplexField corr = inverse_fft(cross);
    double best = -std::numeric_limits<double>::infinity();
    for (const cplx& v : corr.samples()) best = std::max(best, v.real());
    const double mse = std::max(0.0, (truth_energy + est_energy - 2.0 * best) /
                                         static_cast<double>(n));
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(-10.0 * std::log10(mse), kPsnrCapDb);
}

}  // namespace detail

/// Per-iteration observer; receives the state and the current (origin-gauge)
/// PSF estimate after all projections.
using TipObserver = std::function<void(const TipState&, const RealField&)>;

/// The single-frame TIP loop.
///
/// Setup: build masks, split the image, transform the patches, and start the
/// object patches at the observed patches (O_p = I_p), so the first OTF
/// estimate is near ideal and the loop departs from a compact kernel.
/// Each iteration then:
///   1. re-estimates the OTF from the patch cross-spectra,
///   2. projects the PSF (real, non-negative, recentered, finite support,
///      unit sum),
///   3. re-estimates the object patches through the regularized inverse
///      filter, and
///   4. fuses, clips, and re-masks the object (the object-side support).
/// After the final iteration the object is recovered from the whole frame
/// with the multi-frame Wiener filter (N = 1) and clipped non-negative.
///
/// The traced residual at iteration t is ||i - h_t * o_{t-1}||: the data
/// misfit of the kernel regression that iteration solved, scored against
/// the object estimate it consumed (the raw frame at t = 1). It is a
/// monitor, not an objective. Typical traces dip well below iteration 1,
/// then climb as the projections trade data fit for feasibility.
///
/// Deterministic: same image + config gives bit-identical results.
inline TipResult sftip_run(const RealField& image, const TipConfig& config,
                           const std::optional<RealField>& ground_truth_psf = std::nullopt,
                           const TipObserver& observer = nullptr) {
    config.validate();
    const int w = image.width(), h = image.height();
    SupportSpec support{config.support_s};
    support.validate(w, h);
    for (double v : image.samples())
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("sftip_run: image must be finite and non-negative");
    if (ground_truth_psf) require_same_shape(*ground_truth_psf, image, "sftip_run: ground truth");

    const std::size_t n_pix = image.size();
    MaskSet masks = make_masks(w, h, config.grid_p);

    // Fixed data: observed patch spectra and the whole-frame spectrum.
    std::vector<ComplexField> image_spectra;
    image_spectra.reserve(masks.masks.size());
    for (const RealField& patch : split_image(image, masks))
        image_spectra.push_back(forward_fft(patch));
    ComplexField frame_spectrum(w, h);
    for (const ComplexField& ip : image_spectra)
        for (std::size_t i = 0; i < n_pix; ++i) frame_spectrum[i] += ip[i];

    // Cached ground-truth spectra for the per-iteration PSNR.
    std::optional<ComplexField> truth_spec;
    double truth_energy = 0.0;
    if (ground_truth_psf) {
        truth_spec = forward_fft(*ground_truth_psf);
        for (double v : ground_truth_psf->samples()) truth_energy += v * v;
    }

    TipState state(w, h);
    state.patch_spectra = image_spectra;

    // Spectrum of the object estimate the next OTF update will be fit
    // against; starts as the whole observed frame (O_p = I_p).
    ComplexField prev_object_spectrum = frame_spectrum;

    TipResult result(w, h);
    result.trace.records.reserve(config.iters);

    RealField psf(w, h);
    psf.at(0, 0) = 1.0;
    double eps_o_abs = config.eps_o;
    int fallbacks = 0;
    const int cx = w / 2, cy = h / 2;

    for (int k = 1; k <= config.iters; ++k) {
        state.iteration = k;

        // OTF update under the adaptive Tikhonov floor.
        RealField den_h(w, h);
        for (const ComplexField& op : state.patch_spectra)
            for (std::size_t i = 0; i < n_pix; ++i) den_h[i] += std::norm(op[i]);
        const double mean_h = detail::mean_sq_spectrum(den_h);
        const double eps_h_abs = mean_h > 0.0 ? config.eps_h * mean_h : config.eps_h;
        const ComplexField otf_raw = estimate_otf(image_spectra, state.patch_spectra, eps_h_abs);

        // PSF projections: real+nonneg, centroid to the origin, support+sum.
        psf = project_nonneg_real(inverse_fft(otf_raw));
        psf = recenter_to(psf, 0, 0);
        bool fell_back = false;
        psf = project_psf_support(psf, support, &fell_back);
        if (fell_back) ++fallbacks;
        state.otf = forward_fft(psf);

        // Data residual of the regression this iteration just solved: the
        // new kernel against the object estimate it was fit to. Iteration 1
        // scores the initial guess (the raw frame).
        TraceRecord rec;
        rec.iteration = k;
        rec.delta_fallbacks = fallbacks;
        {
            ComplexField model_spec(w, h);
            for (std::size_t i = 0; i < n_pix; ++i)
                model_spec[i] = state.otf[i] * prev_object_spectrum[i];
            const ComplexField model = inverse_fft(model_spec);
            double s = 0.0;
            for (std::size_t i = 0; i < n_pix; ++i) {
                const double d = image[i] - model[i].real();
                s += d * d;
            }
            rec.residual = std::sqrt(s);
        }

        // Object update through the regularized inverse filter.
        RealField den_o(w, h);
        for (std::size_t i = 0; i < n_pix; ++i) den_o[i] = std::norm(state.otf[i]);
        const double mean_o = detail::mean_sq_spectrum(den_o);
        eps_o_abs = mean_o > 0.0 ? config.eps_o * mean_o : config.eps_o;

        // Fused object = sum of the patch estimates; by linearity one
        // inverse transform of the summed spectra. Clip, then re-mask.
        ComplexField fused_spec(w, h);
        for (const ComplexField& ip : image_spectra)
            for (std::size_t i = 0; i < n_pix; ++i)
                fused_spec[i] += ip[i] * std::conj(state.otf[i]) /
                                 (std::norm(state.otf[i]) + eps_o_abs);
        RealField object(w, h);
        {
            const ComplexField fused = inverse_fft(fused_spec);
            for (std::size_t i = 0; i < n_pix; ++i) object[i] = std::max(0.0, fused[i].real());
        }
        ComplexField object_spectrum(w, h);
        for (std::size_t p = 0; p < masks.masks.size(); ++p) {
            RealField masked(w, h);
            const RealField& m = masks.masks[p];
            for (std::size_t i = 0; i < n_pix; ++i) masked[i] = m[i] * object[i];
            state.patch_spectra[p] = forward_fft(masked);
            for (std::size_t i = 0; i < n_pix; ++i)
                object_spectrum[i] += state.patch_spectra[p][i];
        }
        prev_object_spectrum = std::move(object_spectrum);

        if (truth_spec) {
            double est_energy = 0.0;
            for (double v : psf.samples()) est_energy += v * v;
            if (config.align_psnr) {
                rec.psf_psnr_db = detail::aligned_psnr_from_spectra(
                    *truth_spec, truth_energy, state.otf, est_energy, n_pix);
            } else {
                rec.psf_psnr_db = psnr_db(*ground_truth_psf, circular_shift(psf, cx, cy));
            }
        }
        result.trace.records.push_back(rec);
        if (observer) observer(state, psf);
    }

    // Final recovery: single-frame Wiener with the converged OTF.
    const ComplexField final_spec =
        mf_wiener_deconvolve({frame_spectrum}, {state.otf}, eps_o_abs);
    result.object = project_nonneg_real(inverse_fft(final_spec));
    result.psf = circular_shift(psf, cx, cy);  // at-rest convention
    result.trace.finalize_summary();
    return result;
}

}  // namespace sftip
