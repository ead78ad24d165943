#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "relight/image.hpp"
#include "relight/rng.hpp"

namespace relight {

/// Light reduction L(s) = alpha * s^gamma. Monotone on [0,1] and invertible
/// on (0,1], which is what lets an enhancer stand in for L^-1.
struct LightReduction {
    double alpha = 0.4;
    double gamma = 2.2;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) {
            throw std::invalid_argument("LightReduction: alpha must be in (0, 1]");
        }
        if (gamma < 1.0) throw std::invalid_argument("LightReduction: gamma must be >= 1");
    }
};

/// Spatially variant Gaussian noise model. The per-pixel sigma is a smooth
/// random field (coarse grid, bilinearly upsampled), optionally scaled down
/// in bright regions so darker pixels carry more noise.
struct NoiseField {
    double sigma_min = 0.01;
    double sigma_max = 0.06;
    int grid = 4;
    std::uint64_t seed = 1;
    double signal_dependence = 0.5;

    void validate() const {
        if (sigma_min < 0.0) throw std::invalid_argument("NoiseField: sigma_min must be >= 0");
        if (sigma_max < sigma_min) {
            throw std::invalid_argument("NoiseField: sigma_max must be >= sigma_min");
        }
        if (grid < 1) throw std::invalid_argument("NoiseField: grid must be >= 1");
        if (signal_dependence < 0.0 || signal_dependence > 1.0) {
            throw std::invalid_argument("NoiseField: signal_dependence must be in [0, 1]");
        }
    }

    static NoiseField zero() {
        NoiseField nf;
        nf.sigma_min = 0.0;
        nf.sigma_max = 0.0;
        nf.signal_dependence = 0.0;
        return nf;
    }

    static NoiseField uniform(double sigma, std::uint64_t seed_value) {
        NoiseField nf;
        nf.sigma_min = sigma;
        nf.sigma_max = sigma;
        nf.signal_dependence = 0.0;
        nf.seed = seed_value;
        return nf;
    }
};

inline ImageTensor reduce_light(const ImageTensor& x, const LightReduction& lr) {
    lr.validate();
    ImageTensor out = x;
    for (double& v : out.data()) v = lr.alpha * std::pow(v, lr.gamma);
    return clamp_unit(out);
}

namespace detail {

// grid x grid uniform field, bilinearly upsampled (align-corners).
inline std::vector<double> upsampled_unit_field(int height, int width, int grid, Rng& rng) {
    std::vector<double> coarse(static_cast<std::size_t>(grid) * grid);
    for (double& v : coarse) v = rng.uniform01();

    std::vector<double> field(static_cast<std::size_t>(height) * width);
    for (int r = 0; r < height; ++r) {
        const double fr = (grid == 1 || height == 1)
                              ? 0.0
                              : static_cast<double>(r) * (grid - 1) / (height - 1);
        const int r0 = static_cast<int>(fr);
        const int r1 = std::min(r0 + 1, grid - 1);
        const double tr = fr - r0;
        for (int c = 0; c < width; ++c) {
            const double fc = (grid == 1 || width == 1)
                                  ? 0.0
                                  : static_cast<double>(c) * (grid - 1) / (width - 1);
            const int c0 = static_cast<int>(fc);
            const int c1 = std::min(c0 + 1, grid - 1);
            const double tc = fc - c0;
            const double top = coarse[r0 * grid + c0] +
                               tc * (coarse[r0 * grid + c1] - coarse[r0 * grid + c0]);
            const double bot = coarse[r1 * grid + c0] +
                               tc * (coarse[r1 * grid + c1] - coarse[r1 * grid + c0]);
            field[static_cast<std::size_t>(r) * width + c] = top + tr * (bot - top);
        }
    }
    return field;
}

}  // namespace detail

/// Realized per-pixel noise sigma for x under nf (single channel).
/// Consumes the same field draw as add_noise, so the two agree.
inline ImageTensor noise_sigma_map(const ImageTensor& x, const NoiseField& nf) {
    nf.validate();
    Rng rng(nf.seed);
    const std::vector<double> field = detail::upsampled_unit_field(x.height(), x.width(), nf.grid, rng);
    const ImageTensor mean = channel_mean(x);

    ImageTensor sigma(x.height(), x.width(), 1);
    for (int r = 0; r < x.height(); ++r) {
        for (int c = 0; c < x.width(); ++c) {
            const double base =
                nf.sigma_min +
                (nf.sigma_max - nf.sigma_min) * field[static_cast<std::size_t>(r) * x.width() + c];
            sigma.at(r, c, 0) = base * (1.0 - nf.signal_dependence * mean.at(r, c, 0));
        }
    }
    return sigma;
}

/// x + sigma(p) * g with g i.i.d. standard normal per element, clamped to [0,1].
/// All randomness flows from nf.seed; same input and seed give identical bits.
inline ImageTensor add_noise(const ImageTensor& x, const NoiseField& nf) {
    const ImageTensor sigma = noise_sigma_map(x, nf);

    // Continue the stream exactly where the field draw left it.
    Rng rng(nf.seed);
    std::size_t field_draws = static_cast<std::size_t>(nf.grid) * nf.grid;
    while (field_draws--) rng.next_u64();

    ImageTensor out = x;
    for (int r = 0; r < x.height(); ++r) {
        for (int c = 0; c < x.width(); ++c) {
            for (int ch = 0; ch < x.channels(); ++ch) {
                out.at(r, c, ch) = x.at(r, c, ch) + sigma.at(r, c, 0) * rng.normal();
            }
        }
    }
    return clamp_unit(out);
}

/// y = L(n(x)): corrupt first, then darken.
inline ImageTensor degrade(const ImageTensor& x, const LightReduction& lr, const NoiseField& nf) {
    return reduce_light(add_noise(x, nf), lr);
}

}  // namespace relight
