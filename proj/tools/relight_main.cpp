// Command-line front end: degrade / enhance / finetune / eval over PNG and
// PPM images, with every run reproducible from (inputs, config, seed).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relight/relight.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t file_seed(const relight::RunConfig& rc, const fs::path& input) {
    return relight::derive_seed(rc.seed, fnv1a(input.filename().string()));
}

std::string csv6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// (input file, output file) pairs for a run over a file or a directory.
std::vector<std::pair<fs::path, fs::path>> resolve_io(const relight::RunConfig& rc) {
    const fs::path input(rc.input);
    const fs::path output(rc.output);
    std::vector<std::pair<fs::path, fs::path>> jobs;
    if (fs::is_directory(input)) {
        fs::create_directories(output);
        for (const auto& file : relight::list_images(input)) {
            jobs.emplace_back(file, output / file.filename());
        }
        if (jobs.empty()) throw relight::IoError("no images found in " + input.string());
    } else {
        if (!fs::exists(input)) throw relight::IoError("cannot open input: " + input.string());
        if (output.has_parent_path()) fs::create_directories(output.parent_path());
        jobs.emplace_back(input, output);
    }
    return jobs;
}

void write_run_sidecar(const relight::RunConfig& rc) {
    const fs::path output(rc.output);
    const fs::path sidecar = fs::is_directory(fs::path(rc.input)) ? output / "run.cfg"
                                                                  : fs::path(rc.output + ".cfg");
    relight::write_sidecar(rc, sidecar.string());
}

// ---------------------------------------------------------------------------

int run_degrade(const relight::RunConfig& rc) {
    rc.light.validate();
    rc.noise.validate();
    for (const auto& [in_path, out_path] : resolve_io(rc)) {
        const relight::ImageTensor x = relight::read_image(in_path.string());
        relight::NoiseField nf = rc.noise;
        nf.seed = file_seed(rc, in_path);
        relight::write_image(relight::degrade(x, rc.light, nf), out_path.string());
    }
    write_run_sidecar(rc);
    return kExitOk;
}

std::unique_ptr<relight::KernelBankDenoiser> load_denoiser(const relight::RunConfig& rc) {
    if (!rc.weights_file.empty()) {
        return std::make_unique<relight::KernelBankDenoiser>(
            relight::KernelBankDenoiser::load(rc.weights_file));
    }
    return std::make_unique<relight::KernelBankDenoiser>(
        relight::KernelBankDenoiser::standard_bank());
}

relight::ImageTensor enhanced_input(const relight::RunConfig& rc, const fs::path& in_path,
                                    const relight::ImageTensor& y) {
    if (!rc.precomputed_enhanced_dir.empty()) {
        const fs::path p = fs::path(rc.precomputed_enhanced_dir) / in_path.filename();
        relight::ImageTensor e_y = relight::read_image(p.string());
        relight::require_same_shape(e_y, y, "precomputed enhanced input");
        return e_y;
    }
    return relight::RetinexGammaEnhancer(rc.decomposer, rc.enhancer_target_illum).enhance(y);
}

int run_enhance(const relight::RunConfig& rc) {
    const auto denoiser = load_denoiser(rc);
    const auto jobs = resolve_io(rc);
    if (!rc.dump_iters.empty() && jobs.size() != 1) {
        throw std::invalid_argument("--dump-iters expects a single input image");
    }

    for (const auto& [in_path, out_path] : jobs) {
        const relight::ImageTensor y = relight::read_image(in_path.string());
        const relight::ImageTensor e_y = enhanced_input(rc, in_path, y);

        std::optional<relight::ImageTensor> reference;
        if (!rc.reference.empty()) {
            fs::path ref(rc.reference);
            if (fs::is_directory(ref)) ref /= in_path.filename();
            if (fs::exists(ref)) reference = relight::read_image(ref.string());
        }

        relight::SolverConfig sc = rc.solver(file_seed(rc, in_path));
        sc.capture_intermediates = !rc.dump_iters.empty();
        const auto [x_final, trace] =
            relight::solve_from_enhanced(e_y, *denoiser, sc,
                                         reference ? &*reference : nullptr);
        relight::write_image(x_final, out_path.string());

        if (rc.baseline) {
            fs::path base = out_path;
            base.replace_filename(out_path.stem().string() + ".baseline" +
                                  out_path.extension().string());
            relight::write_image(denoiser->denoise(e_y), base.string());
        }

        if (!rc.dump_iters.empty()) {
            const fs::path dump(rc.dump_iters);
            fs::create_directories(dump);
            std::ofstream csv(dump / "trace.csv", std::ios::binary);
            csv << "k,mu,psnr,ssim\n";
            for (const auto& rec : trace.records) {
                char stem[32];
                std::snprintf(stem, sizeof(stem), "iter_%02d", rec.k + 1);
                relight::write_image(*rec.z, (dump / (std::string(stem) + "_z.png")).string());
                relight::write_image(*rec.x, (dump / (std::string(stem) + "_x.png")).string());
                csv << rec.k + 1 << "," << csv6(rec.mu) << ","
                    << (rec.psnr_value ? csv6(*rec.psnr_value) : "") << ","
                    << (rec.ssim_value ? csv6(*rec.ssim_value) : "") << "\n";
            }
        }
    }
    write_run_sidecar(rc);
    return kExitOk;
}

int run_finetune(const relight::RunConfig& rc) {
    const fs::path input(rc.input);
    const auto files = relight::list_images(input);
    if (files.empty()) throw relight::IoError("no training images in " + input.string());

    const relight::RetinexGammaEnhancer enhancer(rc.decomposer, rc.enhancer_target_illum);
    const relight::FinetuneConfig cfg = rc.finetune_config();

    std::vector<relight::TripletSample> samples;
    samples.reserve(files.size());
    for (const auto& file : files) {
        relight::NoiseField nf = cfg.noise;
        nf.seed = file_seed(rc, file);
        samples.push_back(relight::make_triplet(relight::read_image(file.string()), enhancer,
                                                rc.decomposer, nf));
    }

    const auto denoiser = load_denoiser(rc);
    const relight::FinetuneResult result = relight::finetune(*denoiser, std::move(samples), cfg);

    if (fs::path(rc.output).has_parent_path()) {
        fs::create_directories(fs::path(rc.output).parent_path());
    }
    result.denoiser.save(rc.output);

    std::ofstream csv(rc.output + ".losses.csv", std::ios::binary);
    if (!csv) throw relight::IoError("cannot write loss log: " + rc.output + ".losses.csv");
    csv << "epoch,loss_recon,loss_reg,loss_total\n";
    for (const auto& e : result.epoch_losses) {
        csv << e.epoch << "," << csv6(e.recon) << "," << csv6(e.reg) << ","
            << csv6(e.total) << "\n";
    }
    relight::write_sidecar(rc, rc.output + ".cfg");
    return kExitOk;
}

int run_eval(const relight::RunConfig& rc) {
    const fs::path root(rc.input);
    const fs::path low_dir = root / "low";
    const fs::path high_dir = root / "high";
    if (!fs::is_directory(low_dir) || !fs::is_directory(high_dir)) {
        throw relight::IoError("eval expects '" + root.string() + "' to contain low/ and high/");
    }

    if (fs::path(rc.output).has_parent_path()) {
        fs::create_directories(fs::path(rc.output).parent_path());
    }
    std::ofstream csv(rc.output, std::ios::binary);
    if (!csv) throw relight::IoError("cannot write CSV: " + rc.output);
    csv << "filename,psnr,ssim\n";

    int attempted = 0, succeeded = 0;
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& low_path : relight::list_images(low_dir)) {
        const fs::path high_path = high_dir / low_path.filename();
        if (!fs::exists(high_path)) {
            std::cerr << "warning: no counterpart for " << low_path.filename().string()
                      << ", pair skipped\n";
            continue;
        }
        ++attempted;
        try {
            const relight::ImageTensor a = relight::read_image(low_path.string());
            const relight::ImageTensor b = relight::read_image(high_path.string());
            const relight::MetricReport report = relight::metric_report(a, b);
            csv << low_path.filename().string() << "," << csv6(report.psnr) << ","
                << csv6(report.ssim) << "\n";
            psnr_sum += report.psnr;
            ssim_sum += report.ssim;
            ++succeeded;
        } catch (const std::exception& e) {
            std::string reason = e.what();
            for (char& c : reason) {
                if (c == ',' || c == '\n') c = ' ';
            }
            csv << low_path.filename().string() << ",error," << reason << "\n";
        }
    }
    if (succeeded > 0) {
        csv << "mean," << csv6(psnr_sum / succeeded) << "," << csv6(ssim_sum / succeeded) << "\n";
    }
    csv.close();
    relight::write_sidecar(rc, rc.output + ".cfg");

    if (attempted == 0) throw relight::IoError("no image pairs under " + root.string());
    return succeeded > 0 ? kExitOk : kExitIo;
}

// ---------------------------------------------------------------------------

struct FlagSet {
    std::string config, input, output, reference, weights, dump_iters;
    std::uint64_t seed = 0;
    int iterations = 0;
    double mu_start = 0, mu_end = 0, sigma_min = 0, sigma_max = 0;
    double alpha = 0, gamma = 0, lambda = 0;
    bool baseline = false;

    CLI::Option* o_seed = nullptr;
    CLI::Option* o_iterations = nullptr;
    CLI::Option* o_mu_start = nullptr;
    CLI::Option* o_mu_end = nullptr;
    CLI::Option* o_sigma_min = nullptr;
    CLI::Option* o_sigma_max = nullptr;
    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_gamma = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_input = nullptr;
    CLI::Option* o_output = nullptr;
    CLI::Option* o_reference = nullptr;
    CLI::Option* o_weights = nullptr;
    CLI::Option* o_dump = nullptr;
    CLI::Option* o_baseline = nullptr;
};

void add_flags(CLI::App* cmd, FlagSet& f) {
    cmd->add_option("--config", f.config, "key = value config file; flags override it");
    f.o_input = cmd->add_option("--input", f.input, "input image or directory");
    f.o_output = cmd->add_option("--output", f.output, "output path");
    f.o_reference = cmd->add_option("--reference", f.reference, "reference image or directory");
    f.o_seed = cmd->add_option("--seed", f.seed, "master seed for all randomness");
    f.o_iterations = cmd->add_option("--iterations", f.iterations, "solver iterations");
    f.o_mu_start = cmd->add_option("--mu-start", f.mu_start, "first coupling weight");
    f.o_mu_end = cmd->add_option("--mu-end", f.mu_end, "last coupling weight");
    f.o_sigma_min = cmd->add_option("--sigma-min", f.sigma_min, "noise sigma lower bound");
    f.o_sigma_max = cmd->add_option("--sigma-max", f.sigma_max, "noise sigma upper bound");
    f.o_alpha = cmd->add_option("--alpha", f.alpha, "light reduction attenuation");
    f.o_gamma = cmd->add_option("--gamma", f.gamma, "light reduction exponent");
    f.o_lambda = cmd->add_option("--lambda", f.lambda, "fine-tune loss mixing weight");
    f.o_weights = cmd->add_option("--weights", f.weights, "denoiser weight file");
    f.o_dump = cmd->add_option("--dump-iters", f.dump_iters, "directory for per-iteration dumps");
    f.o_baseline = cmd->add_flag("--baseline", f.baseline,
                                 "also write the one-shot enhance-then-denoise result");
}

relight::RunConfig resolve(const std::string& command, const FlagSet& f) {
    relight::RunConfig rc;
    if (!f.config.empty()) relight::load_config_file(rc, f.config);
    rc.command = command;

    if (f.o_input->count()) rc.input = f.input;
    if (f.o_output->count()) rc.output = f.output;
    if (f.o_reference->count()) rc.reference = f.reference;
    if (f.o_seed->count()) rc.seed = f.seed;
    if (f.o_iterations->count()) rc.solver_iterations = f.iterations;
    if (f.o_mu_start->count()) rc.solver_mu_start = f.mu_start;
    if (f.o_mu_end->count()) rc.solver_mu_end = f.mu_end;
    if (f.o_sigma_min->count()) rc.noise.sigma_min = f.sigma_min;
    if (f.o_sigma_max->count()) rc.noise.sigma_max = f.sigma_max;
    if (f.o_alpha->count()) rc.light.alpha = f.alpha;
    if (f.o_gamma->count()) rc.light.gamma = f.gamma;
    if (f.o_lambda->count()) rc.finetune_lambda = f.lambda;
    if (f.o_weights->count()) rc.weights_file = f.weights;
    if (f.o_dump->count()) rc.dump_iters = f.dump_iters;
    if (f.o_baseline->count()) rc.baseline = f.baseline;

    // Moving one sigma bound past the other without touching the second
    // narrows the band instead of erroring out.
    if (f.o_sigma_max->count() && !f.o_sigma_min->count() &&
        rc.noise.sigma_min > rc.noise.sigma_max) {
        rc.noise.sigma_min = rc.noise.sigma_max;
    }
    if (f.o_sigma_min->count() && !f.o_sigma_max->count() &&
        rc.noise.sigma_max < rc.noise.sigma_min) {
        rc.noise.sigma_max = rc.noise.sigma_min;
    }

    if (rc.input.empty()) throw std::invalid_argument("missing --input");
    if (rc.output.empty()) throw std::invalid_argument("missing --output");
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relight: restore low-light noisy images by coupled enhancement and denoising"};
    app.require_subcommand(1);

    FlagSet flags_degrade, flags_enhance, flags_finetune, flags_eval;
    CLI::App* cmd_degrade = app.add_subcommand(
        "degrade", "synthesize low-light noisy images (noise, then light reduction)");
    CLI::App* cmd_enhance = app.add_subcommand(
        "enhance", "restore images with the coupled enhance/denoise solver");
    CLI::App* cmd_finetune = app.add_subcommand(
        "finetune", "self-supervised fine-tuning of the kernel-bank denoiser");
    CLI::App* cmd_eval = app.add_subcommand(
        "eval", "PSNR/SSIM over a paired low//high directory tree");
    add_flags(cmd_degrade, flags_degrade);
    add_flags(cmd_enhance, flags_enhance);
    add_flags(cmd_finetune, flags_finetune);
    add_flags(cmd_eval, flags_eval);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cmd_degrade->parsed()) return run_degrade(resolve("degrade", flags_degrade));
        if (cmd_enhance->parsed()) return run_enhance(resolve("enhance", flags_enhance));
        if (cmd_finetune->parsed()) return run_finetune(resolve("finetune", flags_finetune));
        if (cmd_eval->parsed()) return run_eval(resolve("eval", flags_eval));
    } catch (const relight::NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const relight::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
