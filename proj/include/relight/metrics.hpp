#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "relight/image.hpp"

namespace relight {

/// Identical images report the sentinel instead of +inf so results stay sortable.
inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio in dB with peak 1.0, over all elements.
inline double psnr(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return 10.0 * std::log10(1.0 / mse);
}

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5) over every
/// fully interior position, C1 = 0.01^2 and C2 = 0.03^2 on unit range.
/// Color inputs are compared on the channel-mean plane.
inline double ssim(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "ssim");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;

    if (a.height() < kWindow || a.width() < kWindow) {
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    }

    const ImageTensor pa = a.channels() == 1 ? a : channel_mean(a);
    const ImageTensor pb = b.channels() == 1 ? b : channel_mean(b);

    std::vector<double> window(kWindow * kWindow);
    {
        double sum = 0.0;
        const int r = kWindow / 2;
        for (int i = -r; i <= r; ++i) {
            for (int j = -r; j <= r; ++j) {
                const double v = std::exp(-(i * i + j * j) / (2.0 * kSigma * kSigma));
                window[(i + r) * kWindow + (j + r)] = v;
                sum += v;
            }
        }
        for (double& v : window) v /= sum;
    }

    double total = 0.0;
    int count = 0;
    for (int r = 0; r + kWindow <= a.height(); ++r) {
        for (int c = 0; c + kWindow <= a.width(); ++c) {
            double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int i = 0; i < kWindow; ++i) {
                for (int j = 0; j < kWindow; ++j) {
                    const double w = window[i * kWindow + j];
                    const double va = pa.at(r + i, c + j, 0);
                    const double vb = pb.at(r + i, c + j, 0);
                    ma += w * va;
                    mb += w * vb;
                    // grouped so ssim(a, b) and ssim(b, a) round identically
                    saa += w * (va * va);
                    sbb += w * (vb * vb);
                    sab += w * (va * vb);
                }
            }
            const double var_a = saa - ma * ma;
            const double var_b = sbb - mb * mb;
            const double cov = sab - ma * mb;
            const double idx = ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                               ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
            total += idx;
            ++count;
        }
    }
    return total / count;
}

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
};

inline MetricReport metric_report(const ImageTensor& a, const ImageTensor& b) {
    return MetricReport{psnr(a, b), ssim(a, b)};
}

}  // namespace relight
