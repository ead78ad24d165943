#pragma once

#include <stdexcept>

#include "relight/image.hpp"
#include "relight/kernels.hpp"

namespace relight {

/// Classical decomposer settings: illumination = smoothed channel-max,
/// floored at epsilon so the reflectance quotient stays bounded.
struct DecomposerConfig {
    double smoothing_sigma = 3.0;
    double epsilon = 0.01;

    void validate() const {
        if (epsilon <= 0.0) throw std::invalid_argument("DecomposerConfig: epsilon must be > 0");
        if (smoothing_sigma < 0.0) {
            throw std::invalid_argument("DecomposerConfig: smoothing_sigma must be >= 0");
        }
    }
};

/// reflectance (same channels as source, in [0,1]) and illumination
/// (single channel, strictly positive). reflectance * illumination
/// reproduces the source wherever the source does not exceed the
/// smoothed illumination.
struct RetinexPair {
    ImageTensor reflectance;
    ImageTensor illumination;
};

inline RetinexPair decompose(const ImageTensor& source, const DecomposerConfig& cfg) {
    cfg.validate();

    ImageTensor illum = gaussian_blur(channel_max(source), cfg.smoothing_sigma);
    for (double& v : illum.data()) v = std::max(cfg.epsilon, v);

    ImageTensor refl(source.height(), source.width(), source.channels());
    for (int r = 0; r < source.height(); ++r) {
        for (int c = 0; c < source.width(); ++c) {
            for (int ch = 0; ch < source.channels(); ++ch) {
                refl.at(r, c, ch) = source.at(r, c, ch) / illum.at(r, c, 0);
            }
        }
    }
    return RetinexPair{clamp_unit(refl), illum};
}

/// Pseudo clean target: reflectance of the clean low-light image relit by
/// the enhanced image's illumination.
inline ImageTensor pseudo_target(const ImageTensor& low_clean, const ImageTensor& enhanced_noisy,
                                 const DecomposerConfig& cfg) {
    require_same_shape(low_clean, enhanced_noisy, "pseudo_target");
    const ImageTensor refl_low = decompose(low_clean, cfg).reflectance;
    const ImageTensor illum_enh = decompose(enhanced_noisy, cfg).illumination;
    return clamp_unit(elementwise_mul(refl_low, illum_enh));
}

}  // namespace relight
