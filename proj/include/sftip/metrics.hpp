#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sftip/fft.hpp"
#include "sftip/field.hpp"

namespace sftip {

/// PSNR cap substituted for an exact match (zero MSE); finite and sortable.
inline constexpr double kPsnrCapDb = 300.0;

/// PSNR = -10 log10( (1/N) sum |truth - estimate|^2 ). No peak
/// normalization: absolute dB values assume unit-sum PSFs and are only
/// comparable under that convention.
inline double psnr_db(const RealField& truth, const RealField& estimate) {
    require_same_shape(truth, estimate, "psnr_db");
    double se = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - estimate[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(truth.size());
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(-10.0 * std::log10(mse), kPsnrCapDb);
}

/// Integer toroidal shift of `estimate` maximizing its cross-correlation
/// with `reference`, found via one spectral correlation. Ties break on the
/// smallest row-major index, so the result is deterministic.
inline std::pair<int, int> best_alignment_shift(const RealField& reference,
                                                const RealField& estimate) {
    require_same_shape(reference, estimate, "best_alignment_shift");
    ComplexField cross = forward_fft(reference);
    const ComplexField est = forward_fft(estimate);
    for (std::size_t i = 0; i < cross.size(); ++i) cross[i] *= std::conj(est[i]);
    const ComplexField corr = inverse_fft(cross);

    const int w = reference.width(), h = reference.height();
    double best = -std::numeric_limits<double>::infinity();
    int bx = 0, by = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double c = corr.at(x, y).real();
            if (c > best) {
                best = c;
                bx = x;
                by = y;
            }
        }
    // report shifts in (-n/2, n/2] for readability; toroidally equivalent
    if (bx > w / 2) bx -= w;
    if (by > h / 2) by -= h;
    return {bx, by};
}

/// Shifted copy of `estimate` at the correlation-argmax alignment.
inline RealField align_by_shift(const RealField& reference, const RealField& estimate) {
    auto [dx, dy] = best_alignment_shift(reference, estimate);
    return circular_shift(estimate, dx, dy);
}

/// One solver iteration's bookkeeping. delta_fallbacks counts the
/// PSF-support delta fallback events seen so far (cumulative).
struct TraceRecord {
    int iteration = 0;
    double residual = 0.0;
    std::optional<double> psf_psnr_db;
    int delta_fallbacks = 0;
};

/// Per-iteration convergence record; the summary block is present when a
/// ground-truth PSF was supplied.
struct ConvergenceTrace {
    std::vector<TraceRecord> records;
    std::optional<double> psnr_initial_db;
    std::optional<double> psnr_final_db;
    std::optional<double> improvement_db;

    void finalize_summary() {
        if (records.empty() || !records.front().psf_psnr_db || !records.back().psf_psnr_db)
            return;
        psnr_initial_db = records.front().psf_psnr_db;
        psnr_final_db = records.back().psf_psnr_db;
        improvement_db = *psnr_final_db - *psnr_initial_db;
    }
};

inline const char* trace_csv_header() { return "scenario_id,iteration,residual,psnr_db"; }

/// CSV rows for one trace. psnr_db is empty when no ground truth was given.
inline void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace, int scenario_id) {
    char buf[128];
    for (const TraceRecord& r : trace.records) {
        if (r.psf_psnr_db)
            std::snprintf(buf, sizeof(buf), "%d,%d,%.10g,%.10g", scenario_id, r.iteration,
                          r.residual, *r.psf_psnr_db);
        else
            std::snprintf(buf, sizeof(buf), "%d,%d,%.10g,", scenario_id, r.iteration, r.residual);
        os << buf << '\n';
    }
}

}  // namespace sftip
