#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relight/degrade.hpp"
#include "relight/errors.hpp"
#include "relight/image.hpp"
#include "relight/metrics.hpp"
#include "relight/operators.hpp"
#include "relight/rng.hpp"

namespace relight {

struct SolverConfig {
    int iterations = 10;
    double mu_start = 0.1;
    double mu_end = 10.0;
    NoiseField renoise = NoiseField::uniform(0.01, 1);
    std::uint64_t seed = 1;
    bool capture_intermediates = false;

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("SolverConfig: iterations must be >= 1");
        if (!(mu_start > 0.0)) throw std::invalid_argument("SolverConfig: mu_start must be > 0");
        if (mu_end < mu_start) {
            throw std::invalid_argument("SolverConfig: mu schedule must be non-descending");
        }
        renoise.validate();
    }
};

/// Coupling weight for iteration k: linear from mu_start to mu_end with the
/// endpoints returned exactly.
inline double mu_schedule(const SolverConfig& cfg, int k) {
    cfg.validate();
    if (k < 0 || k >= cfg.iterations) {
        throw std::invalid_argument("mu_schedule: k out of range [0, " +
                                    std::to_string(cfg.iterations - 1) + "]");
    }
    if (k == 0 || cfg.iterations == 1) return cfg.mu_start;
    if (k == cfg.iterations - 1) return cfg.mu_end;
    return cfg.mu_start + k * (cfg.mu_end - cfg.mu_start) / (cfg.iterations - 1);
}

struct SolverIterationRecord {
    int k = 0;
    double mu = 0.0;
    std::optional<ImageTensor> z;       // filled when capture_intermediates
    std::optional<ImageTensor> x;
    std::optional<double> psnr_value;   // filled when a reference is given
    std::optional<double> ssim_value;
};

struct SolverTrace {
    std::vector<SolverIterationRecord> records;
};

/// Quadratic-coupled update: the minimizer of
///   1/2 ||e_y - z||^2 + mu/2 ||z - n(x_k)||^2
/// per pixel, clamped to [0,1]. Written so that z == e_y is reproduced
/// bit-exactly when the re-noised x_k equals e_y.
inline ImageTensor z_update(const ImageTensor& e_y, const ImageTensor& x_k, double mu,
                            const NoiseField& renoise, std::uint64_t iter_seed) {
    require_same_shape(e_y, x_k, "z_update");
    if (!(mu > 0.0)) throw std::invalid_argument("z_update: mu must be > 0");

    NoiseField nf = renoise;
    nf.seed = iter_seed;
    ImageTensor noisy = add_noise(x_k, nf);

    const double inv = 1.0 / (1.0 + mu);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        const double n = noisy.data()[i];
        noisy.data()[i] = n + (e_y.data()[i] - n) * inv;
    }
    return clamp_unit(noisy);
}

/// Prior step: hand the coupled variable to the plugged-in denoiser.
inline ImageTensor x_update(const ImageTensor& z, const Denoiser& d) {
    return d.denoise(z);
}

/// Alternate z_update / x_update for cfg.iterations rounds starting from
/// x_0 = D(e_y), so the first iterate is the plain enhance-then-denoise
/// result and the trace measures what the coupling adds on top of it.
/// x0_override replaces the default initialization when given.
inline std::pair<ImageTensor, SolverTrace> solve_from_enhanced(
    const ImageTensor& e_y, const Denoiser& d, const SolverConfig& cfg,
    const ImageTensor* reference = nullptr, const ImageTensor* x0_override = nullptr) {
    cfg.validate();
    if (reference != nullptr) require_same_shape(e_y, *reference, "solve");
    if (x0_override != nullptr) require_same_shape(e_y, *x0_override, "solve");

    ImageTensor x = x0_override != nullptr ? *x0_override : d.denoise(e_y);
    if (!x.all_finite()) {
        throw NumericalError("solve: non-finite iterate at initialization (x0)");
    }
    SolverTrace trace;
    trace.records.reserve(cfg.iterations);

    for (int k = 0; k < cfg.iterations; ++k) {
        const double mu = mu_schedule(cfg, k);
        const std::uint64_t iter_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        ImageTensor z = z_update(e_y, x, mu, cfg.renoise, iter_seed);
        x = x_update(z, d);
        if (!x.all_finite() || !z.all_finite()) {
            throw NumericalError("solve: non-finite iterate at iteration " + std::to_string(k));
        }

        SolverIterationRecord rec;
        rec.k = k;
        rec.mu = mu;
        if (reference != nullptr) {
            rec.psnr_value = psnr(x, *reference);
            if (std::min(x.height(), x.width()) >= 11) rec.ssim_value = ssim(x, *reference);
        }
        if (cfg.capture_intermediates) {
            rec.z = std::move(z);
            rec.x = x;
        }
        trace.records.push_back(std::move(rec));
    }
    return {std::move(x), std::move(trace)};
}

inline std::pair<ImageTensor, SolverTrace> solve(const ImageTensor& y, const Enhancer& e,
                                                 const Denoiser& d, const SolverConfig& cfg,
                                                 const ImageTensor* reference = nullptr) {
    return solve_from_enhanced(e.enhance(y), d, cfg, reference);
}

}  // namespace relight
