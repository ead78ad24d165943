#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "relight/image.hpp"

namespace relight {

/// Square convolution kernel, taps stored row-major over (2*radius+1)^2.
struct Kernel2D {
    int radius = 0;
    std::vector<double> taps = {1.0};

    int side() const { return 2 * radius + 1; }
    double tap(int dr, int dc) const { return taps[(dr + radius) * side() + (dc + radius)]; }
};

inline Kernel2D make_identity_kernel() {
    return Kernel2D{};
}

inline Kernel2D make_box_kernel(int radius) {
    Kernel2D k;
    k.radius = radius;
    const int n = k.side() * k.side();
    k.taps.assign(n, 1.0 / n);
    return k;
}

inline Kernel2D make_gaussian_kernel(double sigma, int radius) {
    Kernel2D k;
    k.radius = radius;
    k.taps.assign(k.side() * k.side(), 0.0);
    double sum = 0.0;
    for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
            const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
            k.taps[(dr + radius) * k.side() + (dc + radius)] = v;
            sum += v;
        }
    }
    for (double& t : k.taps) t /= sum;
    return k;
}

/// Dense 2-D convolution with edge replication. Kernels here are symmetric,
/// so convolution and correlation coincide.
inline ImageTensor convolve_replicate(const ImageTensor& img, const Kernel2D& kernel) {
    const int h = img.height(), w = img.width(), ch = img.channels();
    ImageTensor out(h, w, ch);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int k = 0; k < ch; ++k) {
                double acc = 0.0;
                for (int dr = -kernel.radius; dr <= kernel.radius; ++dr) {
                    const int rr = std::clamp(r + dr, 0, h - 1);
                    for (int dc = -kernel.radius; dc <= kernel.radius; ++dc) {
                        const int cc = std::clamp(c + dc, 0, w - 1);
                        acc += kernel.tap(dr, dc) * img.at(rr, cc, k);
                    }
                }
                out.at(r, c, k) = acc;
            }
        }
    }
    return out;
}

/// Separable Gaussian blur with edge replication; sigma = 0 is the identity.
inline ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: sigma must be non-negative");
    if (sigma == 0.0) return img;

    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;

    const int h = img.height(), w = img.width(), ch = img.channels();
    ImageTensor tmp(h, w, ch), out(h, w, ch);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int k = 0; k < ch; ++k) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += taps[i + radius] * img.at(r, std::clamp(c + i, 0, w - 1), k);
                }
                tmp.at(r, c, k) = acc;
            }
        }
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int k = 0; k < ch; ++k) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += taps[i + radius] * tmp.at(std::clamp(r + i, 0, h - 1), c, k);
                }
                out.at(r, c, k) = acc;
            }
        }
    }
    return out;
}

}  // namespace relight
