#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "relight/image.hpp"
#include "relight/rng.hpp"

namespace relight {

/// Global average pool: one descriptor entry per channel.
inline std::vector<double> channel_pool(const ImageTensor& f_in) {
    std::vector<double> g(f_in.channels(), 0.0);
    for (int r = 0; r < f_in.height(); ++r) {
        for (int c = 0; c < f_in.width(); ++c) {
            for (int ch = 0; ch < f_in.channels(); ++ch) g[ch] += f_in.at(r, c, ch);
        }
    }
    const double inv = 1.0 / static_cast<double>(f_in.pixel_count());
    for (double& v : g) v *= inv;
    return g;
}

/// Squeeze-excite gate over pooled channel statistics. The two stages are
/// 1x1 convolutions, i.e. fully connected maps over the channel axis:
/// squeeze C -> C/reduction with relu, excite back to C with sigmoid.
struct ChannelAttention {
    int channels = 3;
    int reduced = 3;
    std::vector<double> squeeze_weights;  // [c * reduced + j]
    std::vector<double> squeeze_bias;     // [j]
    std::vector<double> excite_weights;   // [j * channels + c]
    std::vector<double> excite_bias;      // [c]

    static ChannelAttention zeros(int channels, int reduction = 1) {
        ChannelAttention ca;
        ca.channels = channels;
        ca.reduced = reduced_count(channels, reduction);
        ca.squeeze_weights.assign(static_cast<std::size_t>(channels) * ca.reduced, 0.0);
        ca.squeeze_bias.assign(ca.reduced, 0.0);
        ca.excite_weights.assign(static_cast<std::size_t>(ca.reduced) * channels, 0.0);
        ca.excite_bias.assign(channels, 0.0);
        return ca;
    }

    static ChannelAttention seeded(int channels, int reduction, std::uint64_t seed) {
        ChannelAttention ca = zeros(channels, reduction);
        Rng rng(seed);
        for (double& v : ca.squeeze_weights) v = rng.uniform(-1.0, 1.0);
        for (double& v : ca.squeeze_bias) v = rng.uniform(-1.0, 1.0);
        for (double& v : ca.excite_weights) v = rng.uniform(-1.0, 1.0);
        for (double& v : ca.excite_bias) v = rng.uniform(-1.0, 1.0);
        return ca;
    }

    /// Gate values, one per channel, each strictly inside (0, 1).
    std::vector<double> gates(const std::vector<double>& pooled) const {
        if (static_cast<int>(pooled.size()) != channels) {
            throw std::invalid_argument("ChannelAttention: descriptor length mismatch");
        }
        std::vector<double> hidden(reduced, 0.0);
        for (int j = 0; j < reduced; ++j) {
            double acc = squeeze_bias[j];
            for (int c = 0; c < channels; ++c) acc += squeeze_weights[c * reduced + j] * pooled[c];
            hidden[j] = acc > 0.0 ? acc : 0.0;
        }
        std::vector<double> w(channels, 0.0);
        for (int c = 0; c < channels; ++c) {
            double acc = excite_bias[c];
            for (int j = 0; j < reduced; ++j) acc += excite_weights[j * channels + c] * hidden[j];
            w[c] = 1.0 / (1.0 + std::exp(-acc));
        }
        return w;
    }

private:
    static int reduced_count(int channels, int reduction) {
        if (channels < 1) throw std::invalid_argument("ChannelAttention: channels must be >= 1");
        if (reduction < 1 || channels % reduction != 0) {
            throw std::invalid_argument("ChannelAttention: reduction must divide channel count");
        }
        return channels / reduction;
    }
};

inline ImageTensor channel_attention_forward(const ImageTensor& f_in, const ChannelAttention& ca) {
    if (f_in.channels() != ca.channels) {
        throw std::invalid_argument("channel_attention_forward: channel count mismatch");
    }
    const std::vector<double> w = ca.gates(channel_pool(f_in));
    ImageTensor out = f_in;
    for (int r = 0; r < f_in.height(); ++r) {
        for (int c = 0; c < f_in.width(); ++c) {
            for (int ch = 0; ch < f_in.channels(); ++ch) {
                out.at(r, c, ch) = w[ch] * f_in.at(r, c, ch);
            }
        }
    }
    return out;
}

namespace detail {

inline ImageTensor adaptive_average_pool(const ImageTensor& f, int out_h, int out_w) {
    ImageTensor pooled(out_h, out_w, f.channels());
    for (int i = 0; i < out_h; ++i) {
        const int r0 = (i * f.height()) / out_h;
        const int r1 = ((i + 1) * f.height() + out_h - 1) / out_h;  // ceil
        for (int j = 0; j < out_w; ++j) {
            const int c0 = (j * f.width()) / out_w;
            const int c1 = ((j + 1) * f.width() + out_w - 1) / out_w;
            const double inv = 1.0 / static_cast<double>((r1 - r0) * (c1 - c0));
            for (int ch = 0; ch < f.channels(); ++ch) {
                double acc = 0.0;
                for (int r = r0; r < r1; ++r) {
                    for (int c = c0; c < c1; ++c) acc += f.at(r, c, ch);
                }
                pooled.at(i, j, ch) = acc * inv;
            }
        }
    }
    return pooled;
}

inline ImageTensor bilinear_upsample(const ImageTensor& f, int out_h, int out_w) {
    ImageTensor out(out_h, out_w, f.channels());
    const auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
    for (int r = 0; r < out_h; ++r) {
        const double fr = (f.height() == 1 || out_h == 1)
                              ? 0.0
                              : static_cast<double>(r) * (f.height() - 1) / (out_h - 1);
        const int r0 = static_cast<int>(fr);
        const int r1 = std::min(r0 + 1, f.height() - 1);
        const double tr = fr - r0;
        for (int c = 0; c < out_w; ++c) {
            const double fc = (f.width() == 1 || out_w == 1)
                                  ? 0.0
                                  : static_cast<double>(c) * (f.width() - 1) / (out_w - 1);
            const int c0 = static_cast<int>(fc);
            const int c1 = std::min(c0 + 1, f.width() - 1);
            const double tc = fc - c0;
            for (int ch = 0; ch < f.channels(); ++ch) {
                const double top = lerp(f.at(r0, c0, ch), f.at(r0, c1, ch), tc);
                const double bot = lerp(f.at(r1, c0, ch), f.at(r1, c1, ch), tc);
                out.at(r, c, ch) = lerp(top, bot, tr);
            }
        }
    }
    return out;
}

}  // namespace detail

/// Multi-scale context mixer: average-pool to each s x s grid, upsample back,
/// and fuse with the input by a per-channel mean over all copies. Parameter
/// free and exactly constant-preserving.
inline ImageTensor pyramid_pool_forward(const ImageTensor& f_in, const std::vector<int>& scales) {
    if (scales.empty()) throw std::invalid_argument("pyramid_pool_forward: empty scale list");
    for (int s : scales) {
        if (s < 1) throw std::invalid_argument("pyramid_pool_forward: scales must be positive");
    }
    ImageTensor acc = f_in;
    for (int s : scales) {
        const ImageTensor up =
            detail::bilinear_upsample(detail::adaptive_average_pool(f_in, s, s),
                                      f_in.height(), f_in.width());
        for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += up.data()[i];
    }
    const double inv = 1.0 / static_cast<double>(1 + scales.size());
    for (double& v : acc.data()) v *= inv;
    return acc;
}

}  // namespace relight
