#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relight {

/// Dense H x W x C image of real intensities, row-major by (row, col, channel).
/// The working range is [0, 1]; ops that can leave it clamp on the way out.
class ImageTensor {
public:
    ImageTensor() = default;

    ImageTensor(int height, int width, int channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels) {
        validate_shape(height, width, channels);
        data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
    }

    static ImageTensor from_data(int height, int width, int channels, std::vector<double> data) {
        validate_shape(height, width, channels);
        const std::size_t expected = static_cast<std::size_t>(height) * width * channels;
        if (data.size() != expected) {
            throw std::invalid_argument("ImageTensor: data length " + std::to_string(data.size()) +
                                        " does not match shape (" + std::to_string(height) + "x" +
                                        std::to_string(width) + "x" + std::to_string(channels) + ")");
        }
        for (double v : data) {
            if (!std::isfinite(v)) throw std::invalid_argument("ImageTensor: non-finite value");
        }
        ImageTensor img;
        img.height_ = height;
        img.width_ = width;
        img.channels_ = channels;
        img.data_ = std::move(data);
        return img;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

    double& at(int row, int col, int channel) {
        return data_[index(row, col, channel)];
    }
    double at(int row, int col, int channel) const {
        return data_[index(row, col, channel)];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const ImageTensor& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    static void validate_shape(int height, int width, int channels) {
        if (height < 1 || width < 1) {
            throw std::invalid_argument("ImageTensor: dimensions must be positive");
        }
        if (channels != 1 && channels != 3) {
            throw std::invalid_argument("ImageTensor: channels must be 1 or 3");
        }
    }

    std::size_t index(int row, int col, int channel) const {
        return (static_cast<std::size_t>(row) * width_ + col) * channels_ + channel;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 1;
    std::vector<double> data_;
};

/// Square window of side 2*radius + 1.
struct PatchSpec {
    enum class Boundary { ReplicateEdge };

    int radius = 2;
    Boundary boundary = Boundary::ReplicateEdge;

    explicit PatchSpec(int r = 2) : radius(r) {
        if (r < 0) throw std::invalid_argument("PatchSpec: radius must be non-negative");
    }
};

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
}

/// a(p) * b(p); b may be single-channel, broadcast across a's channels.
inline ImageTensor elementwise_mul(const ImageTensor& a, const ImageTensor& b) {
    const bool broadcast = b.channels() == 1 && a.channels() != 1 &&
                           a.height() == b.height() && a.width() == b.width();
    if (!broadcast) require_same_shape(a, b, "elementwise_mul");

    ImageTensor out(a.height(), a.width(), a.channels());
    for (int r = 0; r < a.height(); ++r) {
        for (int c = 0; c < a.width(); ++c) {
            for (int ch = 0; ch < a.channels(); ++ch) {
                const double bv = broadcast ? b.at(r, c, 0) : b.at(r, c, ch);
                out.at(r, c, ch) = a.at(r, c, ch) * bv;
            }
        }
    }
    return out;
}

/// min(1, max(0, v)) per element. Rejects non-finite input.
inline ImageTensor clamp_unit(const ImageTensor& a) {
    ImageTensor out = a;
    for (double& v : out.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("clamp_unit: non-finite value");
        v = std::min(1.0, std::max(0.0, v));
    }
    return out;
}

/// Single-channel map of the max over channels and the replicated window.
inline ImageTensor local_max(const ImageTensor& a, const PatchSpec& patch) {
    const int h = a.height(), w = a.width();
    ImageTensor out(h, w, 1);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double m = 0.0;
            bool first = true;
            for (int dr = -patch.radius; dr <= patch.radius; ++dr) {
                const int rr = std::clamp(r + dr, 0, h - 1);
                for (int dc = -patch.radius; dc <= patch.radius; ++dc) {
                    const int cc = std::clamp(c + dc, 0, w - 1);
                    for (int ch = 0; ch < a.channels(); ++ch) {
                        const double v = a.at(rr, cc, ch);
                        m = first ? v : std::max(m, v);
                        first = false;
                    }
                }
            }
            out.at(r, c, 0) = m;
        }
    }
    return out;
}

/// Per-pixel max across channels (the unsmoothed illumination estimate).
inline ImageTensor channel_max(const ImageTensor& a) {
    ImageTensor out(a.height(), a.width(), 1);
    for (int r = 0; r < a.height(); ++r) {
        for (int c = 0; c < a.width(); ++c) {
            double m = a.at(r, c, 0);
            for (int ch = 1; ch < a.channels(); ++ch) m = std::max(m, a.at(r, c, ch));
            out.at(r, c, 0) = m;
        }
    }
    return out;
}

/// Per-pixel mean across channels.
inline ImageTensor channel_mean(const ImageTensor& a) {
    ImageTensor out(a.height(), a.width(), 1);
    for (int r = 0; r < a.height(); ++r) {
        for (int c = 0; c < a.width(); ++c) {
            double s = 0.0;
            for (int ch = 0; ch < a.channels(); ++ch) s += a.at(r, c, ch);
            out.at(r, c, 0) = s / a.channels();
        }
    }
    return out;
}

inline double mean_value(const ImageTensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s / static_cast<double>(a.size());
}

inline double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

}  // namespace relight
