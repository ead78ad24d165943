#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relight/errors.hpp"
#include "relight/image.hpp"
#include "relight/kernels.hpp"
#include "relight/retinex.hpp"

namespace relight {

/// Light-enhancement operator contract: shape-preserving, output in [0,1],
/// deterministic for fixed parameters.
class Enhancer {
public:
    virtual ~Enhancer() = default;
    virtual ImageTensor enhance(const ImageTensor& y) const = 0;
};

/// Denoiser contract, same rules. denoise_linear exposes the pre-clamp
/// output for operators that have one; training losses evaluate through it
/// so objectives stay exactly quadratic.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual ImageTensor denoise(const ImageTensor& s) const = 0;
    virtual ImageTensor denoise_linear(const ImageTensor& s) const { return denoise(s); }
};

class IdentityEnhancer final : public Enhancer {
public:
    ImageTensor enhance(const ImageTensor& y) const override { return y; }
};

class IdentityDenoiser final : public Denoiser {
public:
    ImageTensor denoise(const ImageTensor& s) const override { return s; }
};

// ---------------------------------------------------------------------------
// Kernel-bank denoiser
// ---------------------------------------------------------------------------

/// D(s) = clamp( sum_i w_i * (K_i * s) ) over a fixed bank of normalized
/// smoothing kernels plus the identity. Linear in the weights before the
/// clamp, so its training objective is quadratic.
class KernelBankDenoiser final : public Denoiser {
public:
    KernelBankDenoiser(std::vector<std::string> kernel_names, std::vector<double> weights)
        : names_(std::move(kernel_names)), weights_(std::move(weights)) {
        if (names_.empty()) throw std::invalid_argument("KernelBankDenoiser: empty bank");
        if (weights_.size() != names_.size()) {
            throw std::invalid_argument("KernelBankDenoiser: weight count does not match kernel count");
        }
        kernels_.reserve(names_.size());
        for (const auto& n : names_) kernels_.push_back(kernel_by_name(n));
    }

    explicit KernelBankDenoiser(const std::vector<std::string>& kernel_names)
        : KernelBankDenoiser(kernel_names, one_hot_first(kernel_names.size())) {}

    /// identity, box3, box5, gauss1, gauss2 with weights one-hot on identity.
    static KernelBankDenoiser standard_bank() {
        return KernelBankDenoiser({"identity", "box3", "box5", "gauss1", "gauss2"},
                                  {1.0, 0.0, 0.0, 0.0, 0.0});
    }

    static Kernel2D kernel_by_name(const std::string& name) {
        if (name == "identity") return make_identity_kernel();
        if (name == "box3") return make_box_kernel(1);
        if (name == "box5") return make_box_kernel(2);
        if (name == "gauss1") return make_gaussian_kernel(1.0, 2);
        if (name == "gauss2") return make_gaussian_kernel(2.0, 4);
        throw std::invalid_argument("KernelBankDenoiser: unknown kernel '" + name + "'");
    }

    std::size_t bank_size() const { return kernels_.size(); }
    const std::vector<std::string>& kernel_names() const { return names_; }
    const std::vector<double>& weights() const { return weights_; }

    void set_weights(std::vector<double> w) {
        if (w.size() != kernels_.size()) {
            throw std::invalid_argument("KernelBankDenoiser: weight count does not match kernel count");
        }
        weights_ = std::move(w);
    }

    /// Per-kernel responses K_i * s; the columns of the linear map w -> D(s).
    std::vector<ImageTensor> responses(const ImageTensor& s) const {
        std::vector<ImageTensor> out;
        out.reserve(kernels_.size());
        for (const auto& k : kernels_) out.push_back(convolve_replicate(s, k));
        return out;
    }

    ImageTensor denoise_linear(const ImageTensor& s) const override {
        ImageTensor acc(s.height(), s.width(), s.channels(), 0.0);
        for (std::size_t i = 0; i < kernels_.size(); ++i) {
            if (weights_[i] == 0.0) continue;
            const ImageTensor resp = convolve_replicate(s, kernels_[i]);
            for (std::size_t j = 0; j < acc.size(); ++j) {
                acc.data()[j] += weights_[i] * resp.data()[j];
            }
        }
        return acc;
    }

    ImageTensor denoise(const ImageTensor& s) const override {
        return clamp_unit(denoise_linear(s));
    }

    /// Plain-text serialization; weights at 17 significant digits so a
    /// save/load round trip reproduces them bit-exactly.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write weight file: " + path);
        out << "type = kernel_bank\n";
        out << "kernels = ";
        for (std::size_t i = 0; i < names_.size(); ++i) {
            out << (i ? "," : "") << names_[i];
        }
        out << "\nweights = ";
        char buf[40];
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", weights_[i]);
            out << (i ? "," : "") << buf;
        }
        out << "\n";
        if (!out) throw IoError("failed writing weight file: " + path);
    }

    static KernelBankDenoiser load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read weight file: " + path);
        std::string line, type;
        std::vector<std::string> names;
        std::vector<double> weights;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw IoError(path + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "type") {
                type = value;
            } else if (key == "kernels") {
                for (const auto& tok : split_csv(value)) names.push_back(tok);
            } else if (key == "weights") {
                for (const auto& tok : split_csv(value)) {
                    try {
                        std::size_t used = 0;
                        const double w = std::stod(tok, &used);
                        if (used != tok.size()) throw std::invalid_argument(tok);
                        weights.push_back(w);
                    } catch (const std::exception&) {
                        throw IoError(path + ":" + std::to_string(lineno) + ": bad weight '" + tok + "'");
                    }
                }
            } else {
                throw IoError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        }
        if (type != "kernel_bank") throw IoError(path + ": missing or unsupported 'type'");
        if (names.empty()) throw IoError(path + ": missing 'kernels'");
        if (weights.size() != names.size()) {
            throw IoError(path + ": " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(names.size()) + " kernels");
        }
        return KernelBankDenoiser(std::move(names), std::move(weights));
    }

private:
    static std::vector<double> one_hot_first(std::size_t n) {
        std::vector<double> w(n, 0.0);
        if (!w.empty()) w[0] = 1.0;
        return w;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split_csv(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
        return out;
    }

    std::vector<std::string> names_;
    std::vector<double> weights_;
    std::vector<Kernel2D> kernels_;
};

// ---------------------------------------------------------------------------
// Classical enhancement
// ---------------------------------------------------------------------------

/// Retinex gamma lift: decompose, raise illumination I -> I^g with g chosen by
/// bisection on [0.05, 1] so the mean illumination hits target_illum, relight.
/// g never exceeds 1, so the operator brightens or leaves alone, never darkens.
inline ImageTensor classical_enhance(const ImageTensor& y, const DecomposerConfig& cfg,
                                     double target_illum) {
    if (!(target_illum > 0.0 && target_illum <= 1.0)) {
        throw std::invalid_argument("classical_enhance: target_illum must be in (0, 1]");
    }
    const RetinexPair pair = decompose(y, cfg);

    const auto mean_lifted = [&](double g) {
        double s = 0.0;
        for (double v : pair.illumination.data()) s += std::pow(v, g);
        return s / static_cast<double>(pair.illumination.size());
    };

    constexpr double kGammaLo = 0.05;
    double gamma = 1.0;
    if (mean_lifted(1.0) < target_illum) {
        if (mean_lifted(kGammaLo) <= target_illum) {
            gamma = kGammaLo;
        } else {
            // mean_lifted is decreasing in g: lo brightens more than hi.
            double lo = kGammaLo, hi = 1.0;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mean_lifted(mid) >= target_illum) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            gamma = 0.5 * (lo + hi);
        }
    }

    ImageTensor lifted = pair.illumination;
    for (double& v : lifted.data()) v = std::pow(v, gamma);
    return clamp_unit(elementwise_mul(pair.reflectance, lifted));
}

class RetinexGammaEnhancer final : public Enhancer {
public:
    explicit RetinexGammaEnhancer(DecomposerConfig cfg = {}, double target_illum = 0.5)
        : cfg_(cfg), target_illum_(target_illum) {}

    ImageTensor enhance(const ImageTensor& y) const override {
        return classical_enhance(y, cfg_, target_illum_);
    }

private:
    DecomposerConfig cfg_;
    double target_illum_;
};

// ---------------------------------------------------------------------------
// Bright channel loss
// ---------------------------------------------------------------------------

struct BrightChannelParams {
    PatchSpec patch{2};
    enum class Reduction { Sum, Mean } reduction = Reduction::Sum;
};

/// Penalty for pixels whose local cross-channel maximum falls short of 1.
/// Zero exactly when every local bright channel is saturated.
inline double bright_channel_loss(const ImageTensor& image, const BrightChannelParams& params) {
    const ImageTensor bright = local_max(image, params.patch);
    double loss = 0.0;
    for (double v : bright.data()) loss += 1.0 - v;
    if (params.reduction == BrightChannelParams::Reduction::Mean) {
        loss /= static_cast<double>(bright.size());
    }
    return loss;
}

}  // namespace relight
