#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sftip/metrics.hpp"
#include "sftip/rng.hpp"
#include "sftip/simulate.hpp"
#include "sftip/tip.hpp"

namespace sftip {

struct BenchmarkResult {
    std::vector<double> improvements_db;  // one per scenario
    std::vector<ConvergenceTrace> traces;
    double mean_improvement_db = 0.0;
    double std_improvement_db = 0.0;  // sample std (n - 1); 0 for a single scenario
};

/// Ensemble convergence study: `count` independent scenarios (fresh random
/// wavefront each, same bar-target scene), each solved blind with `config`,
/// PSF recovery scored as aligned PSNR against the known truth. Scenario k
/// uses the stream-mixed seed (seed, k), so runs are independent of order
/// and reproducible per (seed, count).
inline BenchmarkResult run_convergence_benchmark(int count, const TipConfig& config, double sigma,
                                                 std::uint64_t seed, int width = 128,
                                                 int height = 128, int mode_count = 20) {
    if (count < 1) throw std::invalid_argument("run_convergence_benchmark: count must be >= 1");
    config.validate();
    BenchmarkResult out;
    out.improvements_db.reserve(count);
    out.traces.reserve(count);
    for (int s = 0; s < count; ++s) {
        const ConvergenceScenario scen =
            make_scenario(width, height, mode_count, sigma, mix_seed(seed, static_cast<std::uint64_t>(s)));
        TipResult run = sftip_run(scen.image, config, scen.psf);
        out.improvements_db.push_back(run.trace.improvement_db.value());
        out.traces.push_back(std::move(run.trace));
    }
    double sum = 0.0;
    for (double v : out.improvements_db) sum += v;
    out.mean_improvement_db = sum / static_cast<double>(count);
    if (count > 1) {
        double ss = 0.0;
        for (double v : out.improvements_db) {
            const double d = v - out.mean_improvement_db;
            ss += d * d;
        }
        out.std_improvement_db = std::sqrt(ss / static_cast<double>(count - 1));
    }
    return out;
}

/// All per-iteration records of every scenario, one CSV stream.
inline void write_benchmark_csv(std::ostream& os, const BenchmarkResult& result) {
    os << trace_csv_header() << "\n";
    for (std::size_t s = 0; s < result.traces.size(); ++s)
        write_trace_csv(os, result.traces[s], static_cast<int>(s));
}

}  // namespace sftip
