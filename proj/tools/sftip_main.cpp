// sftip: single-frame blind deconvolution CLI.
//
// Subcommands:
//   deconvolve        blind-deconvolve one grayscale image
//   simulate          generate a scene / PSF / aberrated-image triple
//   convergence-bench ensemble PSF-recovery study with known ground truth
//
// Exit codes: 0 success; 2 unreadable input or invalid flags; 3 the solver
// rejected the input as degenerate.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sftip/sftip.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;

struct CommonFlags {
    int patches = 4;
    int support = 32;
    int iters = 100;
    double eps_h = 1e-3;
    double eps_o = 1e-3;
    std::uint64_t seed = 0;
    int size = 128;
    double sigma = 0.5;
    std::string scene = "bar-target";
    std::string scene_file;
    bool no_align = false;
    std::string trace_path;
    std::string out_dir = ".";
};

sftip::TipConfig to_config(const CommonFlags& f) {
    sftip::TipConfig cfg;
    cfg.grid_p = f.patches;
    cfg.support_s = f.support;
    cfg.iters = f.iters;
    cfg.eps_h = f.eps_h;
    cfg.eps_o = f.eps_o;
    cfg.seed = f.seed;
    cfg.align_psnr = !f.no_align;
    return cfg;
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    if (dir.back() == '/') return dir + name;
    return dir + "/" + name;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool with_sim_flags) {
    cmd->add_option("--patches", f.patches, "mask grid per axis (P, giving P^2 pseudo-patches)")
        ->capture_default_str();
    cmd->add_option("--support", f.support, "PSF support box side, pixels")->capture_default_str();
    cmd->add_option("--iters", f.iters, "solver iterations")->capture_default_str();
    cmd->add_option("--eps-h", f.eps_h, "relative Tikhonov floor, OTF update")
        ->capture_default_str();
    cmd->add_option("--eps-o", f.eps_o, "relative Tikhonov floor, object update")
        ->capture_default_str();
    cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
    cmd->add_flag("--no-align", f.no_align, "score PSF PSNR without shift alignment");
    cmd->add_option("--trace", f.trace_path, "trace CSV path (default <out>/trace.csv)");
    cmd->add_option("--out", f.out_dir, "output directory (must exist)")->capture_default_str();
    if (with_sim_flags) {
        cmd->add_option("--size", f.size, "simulated image side, pixels")->capture_default_str();
        cmd->add_option("--sigma", f.sigma, "aberration coefficient sigma, radians")
            ->capture_default_str();
        cmd->add_option("--scene", f.scene, "synthetic scene: bar-target|checkerboard|flat")
            ->capture_default_str();
        cmd->add_option("--scene-file", f.scene_file, "use this grayscale image as the object");
    }
}

// Manifest keys that describe a run but are not settable flags. A manifest
// fed back through --config must not trip the unknown-key check.
bool is_informational_key(const std::string& key) {
    static const char* kKeys[] = {"format_version", "tool_version", "command", "input",
                                  "duration_ms",    "mode_count",   "mean_improvement_db",
                                  "std_improvement_db"};
    for (const char* k : kKeys)
        if (key == k) return true;
    return key.rfind("output_", 0) == 0 || key.rfind("aberration_", 0) == 0;
}

// Config file values become flag defaults; explicit flags override them.
// Returns false (after printing to stderr) on an unusable file or key.
bool apply_config_file(const std::string& path, CommonFlags& f, std::string* gt_psf,
                       std::string* count) {
    sftip::RunManifest conf;
    try {
        conf = sftip::load_key_values(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return false;
    }
    for (const auto& [key, value] : conf.entries) {
        try {
            if (key == "patches") f.patches = std::stoi(value);
            else if (key == "support") f.support = std::stoi(value);
            else if (key == "iters") f.iters = std::stoi(value);
            else if (key == "eps-h") f.eps_h = std::stod(value);
            else if (key == "eps-o") f.eps_o = std::stod(value);
            else if (key == "seed") f.seed = std::stoull(value);
            else if (key == "size") f.size = std::stoi(value);
            else if (key == "sigma") f.sigma = std::stod(value);
            else if (key == "scene") f.scene = value;
            else if (key == "scene-file") f.scene_file = value;
            else if (key == "no-align") f.no_align = (value == "1" || value == "true");
            else if (key == "trace") f.trace_path = value;
            else if (key == "out") f.out_dir = value;
            else if (key == "gt-psf" && gt_psf) *gt_psf = value;
            else if (key == "count" && count) *count = value;
            else if (!is_informational_key(key)) {
                std::cerr << "error: " << path << ": unknown config key '" << key << "'\n";
                return false;
            }
        } catch (const std::exception&) {
            std::cerr << "error: " << path << ": bad value for '" << key << "': " << value
                      << "\n";
            return false;
        }
    }
    return true;
}

void manifest_add_flags(sftip::RunManifest& m, const CommonFlags& f, bool with_sim_flags) {
    m.set("patches", std::to_string(f.patches));
    m.set("support", std::to_string(f.support));
    m.set("iters", std::to_string(f.iters));
    m.set("eps-h", format_double(f.eps_h));
    m.set("eps-o", format_double(f.eps_o));
    m.set("seed", std::to_string(f.seed));
    m.set("no-align", f.no_align ? "1" : "0");
    if (with_sim_flags) {
        m.set("size", std::to_string(f.size));
        m.set("sigma", format_double(f.sigma));
        m.set("scene", f.scene);
        if (!f.scene_file.empty()) m.set("scene-file", f.scene_file);
    }
}

// Edge-replicate padding up to a multiple of the mask grid; the solver
// needs exact tiles, user images come in any size.
sftip::RealField pad_to_multiple(const sftip::RealField& img, int p, int* pad_w, int* pad_h) {
    const int w = img.width(), h = img.height();
    const int new_w = (w + p - 1) / p * p;
    const int new_h = (h + p - 1) / p * p;
    *pad_w = new_w - w;
    *pad_h = new_h - h;
    if (new_w == w && new_h == h) return img;
    sftip::RealField out(new_w, new_h);
    for (int y = 0; y < new_h; ++y)
        for (int x = 0; x < new_w; ++x)
            out.at(x, y) = img.at(std::min(x, w - 1), std::min(y, h - 1));
    return out;
}

sftip::RealField crop(const sftip::RealField& img, int w, int h) {
    if (img.width() == w && img.height() == h) return img;
    sftip::RealField out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x, y);
    return out;
}

int cmd_deconvolve(const std::string& input, const CommonFlags& flags,
                   const std::string& gt_psf_path) {
    const auto t0 = std::chrono::steady_clock::now();

    const sftip::TipConfig cfg = to_config(flags);
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    sftip::RealField image(1, 1);
    try {
        image = sftip::read_image_normalized(input);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::optional<sftip::RealField> gt_psf;
    if (!gt_psf_path.empty()) {
        try {
            gt_psf = sftip::read_matrix_text(gt_psf_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }

    const int orig_w = image.width(), orig_h = image.height();
    int pad_w = 0, pad_h = 0;
    sftip::RealField padded = pad_to_multiple(image, flags.patches, &pad_w, &pad_h);
    if (gt_psf && !gt_psf->same_shape(padded)) {
        std::cerr << "error: ground-truth PSF shape must match the padded image ("
                  << padded.width() << "x" << padded.height() << ")\n";
        return kExitUsage;
    }

    sftip::TipResult result(padded.width(), padded.height());
    try {
        result = sftip::sftip_run(padded, cfg, gt_psf);
    } catch (const std::exception& e) {
        std::cerr << "error: degenerate input: " << e.what() << "\n";
        return kExitDegenerate;
    }

    const std::string object_path = join_path(flags.out_dir, "object.png");
    const std::string psf_png_path = join_path(flags.out_dir, "psf.png");
    const std::string psf_txt_path = join_path(flags.out_dir, "psf.txt");
    const std::string trace_path =
        flags.trace_path.empty() ? join_path(flags.out_dir, "trace.csv") : flags.trace_path;
    const std::string manifest_path = join_path(flags.out_dir, "manifest.txt");

    try {
        sftip::write_image_scaled(object_path, crop(result.object, orig_w, orig_h));
        sftip::write_image_scaled(psf_png_path, result.psf);
        sftip::write_matrix_text(psf_txt_path, result.psf);
        std::ostringstream csv;
        csv << "# format_version=" << sftip::kFormatVersion << "\n"
            << sftip::trace_csv_header() << "\n";
        sftip::write_trace_csv(csv, result.trace, 0);
        sftip::detail::write_file_atomic(trace_path, csv.str());

        sftip::RunManifest m = sftip::make_manifest("deconvolve");
        manifest_add_flags(m, flags, false);
        m.set("input", input);
        if (!gt_psf_path.empty()) m.set("gt-psf", gt_psf_path);
        m.set("output_object", object_path);
        m.set("output_psf_image", psf_png_path);
        m.set("output_psf_matrix", psf_txt_path);
        m.set("output_trace", trace_path);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        m.set("duration_ms", std::to_string(ms));
        m.save(manifest_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::cout << "deconvolve: " << flags.iters << " iterations, final residual "
              << result.trace.records.back().residual << "\n";
    if (result.trace.improvement_db)
        std::cout << "psf psnr improvement: " << *result.trace.improvement_db << " dB\n";
    std::cout << "wrote " << object_path << ", " << psf_png_path << ", " << psf_txt_path << ", "
              << trace_path << ", " << manifest_path << "\n";
    return kExitOk;
}

int cmd_simulate(const CommonFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();

    sftip::RealField scene(1, 1);
    try {
        if (!flags.scene_file.empty()) {
            scene = sftip::read_image_normalized(flags.scene_file);
        } else {
            if (flags.size < 4) {
                std::cerr << "error: --size must be at least 4\n";
                return kExitUsage;
            }
            scene = sftip::make_test_scene(sftip::scene_kind_from_name(flags.scene), flags.size,
                                           flags.size);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const std::string scene_path = join_path(flags.out_dir, "scene.png");
    const std::string psf_png_path = join_path(flags.out_dir, "psf.png");
    const std::string psf_txt_path = join_path(flags.out_dir, "psf.txt");
    const std::string image_path = join_path(flags.out_dir, "image.png");
    const std::string manifest_path = join_path(flags.out_dir, "manifest.txt");

    try {
        const sftip::AberrationSpec ab = sftip::random_aberration(20, flags.sigma, flags.seed);
        const sftip::RealField psf =
            sftip::psf_from_pupil(sftip::make_pupil(ab, scene.width(), scene.height()));
        const sftip::RealField image = sftip::simulate_observation(scene, psf, 0.0, flags.seed);

        sftip::write_image_scaled(scene_path, scene);
        sftip::write_image_scaled(psf_png_path, psf);
        sftip::write_matrix_text(psf_txt_path, psf);
        sftip::write_image_levels(image_path, image);

        sftip::RunManifest m = sftip::make_manifest("simulate");
        manifest_add_flags(m, flags, true);
        m.set("mode_count", "20");
        for (std::size_t j = 1; j < ab.coefficients.size(); ++j)
            m.set("aberration_c" + std::to_string(j + 1), format_double(ab.coefficients[j]));
        m.set("output_scene", scene_path);
        m.set("output_psf_image", psf_png_path);
        m.set("output_psf_matrix", psf_txt_path);
        m.set("output_image", image_path);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        m.set("duration_ms", std::to_string(ms));
        m.save(manifest_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::cout << "simulate: wrote " << scene_path << ", " << psf_png_path << ", " << psf_txt_path
              << ", " << image_path << ", " << manifest_path << "\n";
    return kExitOk;
}

int cmd_convergence_bench(int count, const CommonFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    if (count < 1) {
        std::cerr << "error: --count must be at least 1\n";
        return kExitUsage;
    }
    if (flags.size < 4) {
        std::cerr << "error: --size must be at least 4\n";
        return kExitUsage;
    }
    const sftip::TipConfig cfg = to_config(flags);
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    sftip::BenchmarkResult result;
    try {
        result = sftip::run_convergence_benchmark(count, cfg, flags.sigma,
                                                  flags.seed, flags.size, flags.size);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const std::string summary_path = join_path(flags.out_dir, "summary.csv");
    const std::string traces_path =
        flags.trace_path.empty() ? join_path(flags.out_dir, "traces.csv") : flags.trace_path;
    const std::string manifest_path = join_path(flags.out_dir, "manifest.txt");

    try {
        std::ostringstream summary;
        summary << "# format_version=" << sftip::kFormatVersion << "\n"
                << "scenario_id,improvement_db\n";
        for (std::size_t s = 0; s < result.improvements_db.size(); ++s)
            summary << s << "," << format_double(result.improvements_db[s]) << "\n";
        summary << "mean," << format_double(result.mean_improvement_db) << "\n";
        summary << "std," << format_double(result.std_improvement_db) << "\n";
        sftip::detail::write_file_atomic(summary_path, summary.str());

        std::ostringstream traces;
        traces << "# format_version=" << sftip::kFormatVersion << "\n";
        sftip::write_benchmark_csv(traces, result);
        sftip::detail::write_file_atomic(traces_path, traces.str());

        sftip::RunManifest m = sftip::make_manifest("convergence-bench");
        manifest_add_flags(m, flags, true);
        m.set("count", std::to_string(count));
        m.set("mean_improvement_db", format_double(result.mean_improvement_db));
        m.set("std_improvement_db", format_double(result.std_improvement_db));
        m.set("output_summary", summary_path);
        m.set("output_traces", traces_path);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        m.set("duration_ms", std::to_string(ms));
        m.save(manifest_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::cout << "convergence-bench: " << count << " scenarios, mean improvement "
              << result.mean_improvement_db << " dB +- " << result.std_improvement_db << " dB\n";
    std::cout << "wrote " << summary_path << ", " << traces_path << ", " << manifest_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-frame blind deconvolution toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sftip::kToolVersion);

    CommonFlags dec_flags, sim_flags, bench_flags;
    std::string input_path, gt_psf_path, config_path;
    int bench_count = 20;

    CLI::App* dec = app.add_subcommand("deconvolve", "blind-deconvolve a grayscale image");
    dec->add_option("input", input_path, "8- or 16-bit grayscale PNG or TIFF")->required();
    add_common_flags(dec, dec_flags, false);
    dec->add_option("--gt-psf", gt_psf_path,
                    "ground-truth PSF matrix file; enables the trace PSNR column");
    dec->add_option("--config", config_path, "key = value config file (flags override it)");

    CLI::App* sim = app.add_subcommand("simulate", "generate scene, PSF, and aberrated image");
    add_common_flags(sim, sim_flags, true);
    sim->add_option("--config", config_path, "key = value config file (flags override it)");

    CLI::App* bench =
        app.add_subcommand("convergence-bench", "PSF-recovery statistics over random scenarios");
    bench->add_option("--count", bench_count, "number of scenarios")->capture_default_str();
    add_common_flags(bench, bench_flags, true);
    bench->add_option("--config", config_path, "key = value config file (flags override it)");

    // Pass 1 binds --config; pass 2 reparses the command line on top of the
    // file's values, so explicit flags win.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    CommonFlags& flags = dec->parsed() ? dec_flags : sim->parsed() ? sim_flags : bench_flags;

    if (!config_path.empty()) {
        std::string count_str;
        if (!apply_config_file(config_path, flags, &gt_psf_path, &count_str)) return kExitUsage;
        if (!count_str.empty() && bench->parsed()) {
            try {
                bench_count = std::stoi(count_str);
            } catch (const std::exception&) {
                std::cerr << "error: bad count in config: " << count_str << "\n";
                return kExitUsage;
            }
        }
        try {
            app.clear();
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? kExitOk : kExitUsage;
        }
    }

    try {
        if (dec->parsed()) return cmd_deconvolve(input_path, dec_flags, gt_psf_path);
        if (sim->parsed()) return cmd_simulate(sim_flags);
        return cmd_convergence_bench(bench_count, bench_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
