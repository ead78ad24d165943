#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relight/degrade.hpp"
#include "relight/errors.hpp"
#include "relight/operators.hpp"
#include "relight/retinex.hpp"
#include "relight/selfsup.hpp"
#include "relight/solver.hpp"

namespace relight {

/// Fully resolved settings for one CLI run. Every field has a default, so a
/// run that names only input and output is valid. The resolved state is
/// echoed verbatim to a sidecar file that can be fed back via --config.
struct RunConfig {
    std::string command;
    std::string input;
    std::string output;
    std::string reference;
    std::uint64_t seed = 1;

    DecomposerConfig decomposer;
    double enhancer_target_illum = 0.5;
    LightReduction light;
    NoiseField noise;  // degrade output noise, also the fine-tuning corruption

    int solver_iterations = 10;
    double solver_mu_start = 0.1;
    double solver_mu_end = 10.0;
    double renoise_sigma_min = 0.01;
    double renoise_sigma_max = 0.01;
    int renoise_grid = 4;
    double renoise_signal_dependence = 0.0;

    double finetune_lambda = 0.3;
    int finetune_epochs = 5;
    double finetune_learning_rate = 1e-3;

    int bright_radius = 2;
    std::string bright_reduction = "sum";

    std::string weights_file;
    std::string dump_iters;
    bool baseline = false;
    std::string precomputed_enhanced_dir;

    NoiseField solver_renoise(std::uint64_t run_seed) const {
        NoiseField nf;
        nf.sigma_min = renoise_sigma_min;
        nf.sigma_max = renoise_sigma_max;
        nf.grid = renoise_grid;
        nf.signal_dependence = renoise_signal_dependence;
        nf.seed = run_seed;
        return nf;
    }

    SolverConfig solver(std::uint64_t run_seed) const {
        SolverConfig sc;
        sc.iterations = solver_iterations;
        sc.mu_start = solver_mu_start;
        sc.mu_end = solver_mu_end;
        sc.renoise = solver_renoise(run_seed);
        sc.seed = run_seed;
        return sc;
    }

    FinetuneConfig finetune_config() const {
        FinetuneConfig fc;
        fc.lambda = finetune_lambda;
        fc.epochs = finetune_epochs;
        fc.learning_rate = finetune_learning_rate;
        fc.noise = noise;
        fc.seed = seed;
        return fc;
    }

    BrightChannelParams bright_params() const {
        BrightChannelParams bp;
        bp.patch = PatchSpec(bright_radius);
        bp.reduction = bright_reduction == "mean" ? BrightChannelParams::Reduction::Mean
                                                  : BrightChannelParams::Reduction::Sum;
        return bp;
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + value + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer value for " + key + ": '" + value + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad seed value for " + key + ": '" + value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config: bad boolean value for " + key + ": '" + value + "'");
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace detail

inline void apply_config_entry(RunConfig& rc, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_u64;

    if (key == "command") rc.command = value;
    else if (key == "io.input") rc.input = value;
    else if (key == "io.output") rc.output = value;
    else if (key == "io.reference") rc.reference = value;
    else if (key == "seed") rc.seed = parse_u64(key, value);
    else if (key == "decomposer.smoothing_sigma") rc.decomposer.smoothing_sigma = parse_double(key, value);
    else if (key == "decomposer.epsilon") rc.decomposer.epsilon = parse_double(key, value);
    else if (key == "enhancer.target_illum") rc.enhancer_target_illum = parse_double(key, value);
    else if (key == "light.alpha") rc.light.alpha = parse_double(key, value);
    else if (key == "light.gamma") rc.light.gamma = parse_double(key, value);
    else if (key == "noise.sigma_min") rc.noise.sigma_min = parse_double(key, value);
    else if (key == "noise.sigma_max") rc.noise.sigma_max = parse_double(key, value);
    else if (key == "noise.grid") rc.noise.grid = static_cast<int>(parse_int(key, value));
    else if (key == "noise.signal_dependence") rc.noise.signal_dependence = parse_double(key, value);
    else if (key == "solver.iterations") rc.solver_iterations = static_cast<int>(parse_int(key, value));
    else if (key == "solver.mu_start") rc.solver_mu_start = parse_double(key, value);
    else if (key == "solver.mu_end") rc.solver_mu_end = parse_double(key, value);
    else if (key == "solver.renoise_sigma_min") rc.renoise_sigma_min = parse_double(key, value);
    else if (key == "solver.renoise_sigma_max") rc.renoise_sigma_max = parse_double(key, value);
    else if (key == "solver.renoise_grid") rc.renoise_grid = static_cast<int>(parse_int(key, value));
    else if (key == "solver.renoise_signal_dependence") rc.renoise_signal_dependence = parse_double(key, value);
    else if (key == "finetune.lambda") rc.finetune_lambda = parse_double(key, value);
    else if (key == "finetune.epochs") rc.finetune_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "finetune.learning_rate") rc.finetune_learning_rate = parse_double(key, value);
    else if (key == "bright.radius") rc.bright_radius = static_cast<int>(parse_int(key, value));
    else if (key == "bright.reduction") {
        if (value != "sum" && value != "mean") {
            throw std::invalid_argument("config: bright.reduction must be 'sum' or 'mean'");
        }
        rc.bright_reduction = value;
    } else if (key == "denoiser.weights_file") rc.weights_file = value;
    else if (key == "enhance.dump_iters") rc.dump_iters = value;
    else if (key == "enhance.baseline") rc.baseline = parse_bool(key, value);
    else if (key == "enhance.precomputed_dir") rc.precomputed_enhanced_dir = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// Reads `key = value` lines; '#' starts a comment, blank lines are skipped.
inline void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            apply_config_entry(rc, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

/// Echo of the fully resolved run, loadable back through --config.
inline std::string serialize_config(const RunConfig& rc) {
    using detail::format_double;
    std::ostringstream out;
    out << "command = " << rc.command << "\n";
    out << "io.input = " << rc.input << "\n";
    out << "io.output = " << rc.output << "\n";
    out << "io.reference = " << rc.reference << "\n";
    out << "seed = " << rc.seed << "\n";
    out << "decomposer.smoothing_sigma = " << format_double(rc.decomposer.smoothing_sigma) << "\n";
    out << "decomposer.epsilon = " << format_double(rc.decomposer.epsilon) << "\n";
    out << "enhancer.target_illum = " << format_double(rc.enhancer_target_illum) << "\n";
    out << "light.alpha = " << format_double(rc.light.alpha) << "\n";
    out << "light.gamma = " << format_double(rc.light.gamma) << "\n";
    out << "noise.sigma_min = " << format_double(rc.noise.sigma_min) << "\n";
    out << "noise.sigma_max = " << format_double(rc.noise.sigma_max) << "\n";
    out << "noise.grid = " << rc.noise.grid << "\n";
    out << "noise.signal_dependence = " << format_double(rc.noise.signal_dependence) << "\n";
    out << "solver.iterations = " << rc.solver_iterations << "\n";
    out << "solver.mu_start = " << format_double(rc.solver_mu_start) << "\n";
    out << "solver.mu_end = " << format_double(rc.solver_mu_end) << "\n";
    out << "solver.renoise_sigma_min = " << format_double(rc.renoise_sigma_min) << "\n";
    out << "solver.renoise_sigma_max = " << format_double(rc.renoise_sigma_max) << "\n";
    out << "solver.renoise_grid = " << rc.renoise_grid << "\n";
    out << "solver.renoise_signal_dependence = " << format_double(rc.renoise_signal_dependence) << "\n";
    out << "finetune.lambda = " << format_double(rc.finetune_lambda) << "\n";
    out << "finetune.epochs = " << rc.finetune_epochs << "\n";
    out << "finetune.learning_rate = " << format_double(rc.finetune_learning_rate) << "\n";
    out << "bright.radius = " << rc.bright_radius << "\n";
    out << "bright.reduction = " << rc.bright_reduction << "\n";
    out << "denoiser.weights_file = " << rc.weights_file << "\n";
    out << "enhance.dump_iters = " << rc.dump_iters << "\n";
    out << "enhance.baseline = " << (rc.baseline ? "true" : "false") << "\n";
    out << "enhance.precomputed_dir = " << rc.precomputed_enhanced_dir << "\n";
    return out.str();
}

inline void write_sidecar(const RunConfig& rc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write sidecar: " + path);
    out << serialize_config(rc);
    if (!out) throw IoError("failed writing sidecar: " + path);
}

}  // namespace relight
