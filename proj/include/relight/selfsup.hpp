#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "relight/degrade.hpp"
#include "relight/errors.hpp"
#include "relight/image.hpp"
#include "relight/operators.hpp"
#include "relight/retinex.hpp"

namespace relight {

/// One training item: low-light input, its enhanced (still noisy) version,
/// the cached pseudo clean target, and the twice-corrupted enhanced image.
struct TripletSample {
    ImageTensor s_low;
    ImageTensor s_enh;
    ImageTensor s_pseudo;
    ImageTensor s_ne;
};

inline TripletSample make_triplet(const ImageTensor& s_low, const Enhancer& enhancer,
                                  const DecomposerConfig& decomposer, const NoiseField& noise) {
    TripletSample t;
    t.s_low = s_low;
    t.s_enh = enhancer.enhance(s_low);
    t.s_pseudo = pseudo_target(t.s_low, t.s_enh, decomposer);
    t.s_ne = add_noise(t.s_enh, noise);
    return t;
}

struct FinetuneConfig {
    double lambda = 0.3;
    int epochs = 5;
    double learning_rate = 1e-3;
    NoiseField noise;
    std::uint64_t seed = 1;

    // Descent controls; the per-epoch objective is a small quadratic, so
    // steps are cheap and the cap is generous.
    int max_steps_per_epoch = 500000;
    double grad_tolerance = 1e-12;

    void validate() const {
        if (lambda < 0.0) throw std::invalid_argument("FinetuneConfig: lambda must be >= 0");
        if (epochs < 1) throw std::invalid_argument("FinetuneConfig: epochs must be >= 1");
        if (!(learning_rate > 0.0)) {
            throw std::invalid_argument("FinetuneConfig: learning_rate must be > 0");
        }
        if (max_steps_per_epoch < 1) {
            throw std::invalid_argument("FinetuneConfig: max_steps_per_epoch must be >= 1");
        }
        noise.validate();
    }
};

inline double sum_squared_diff(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "sum_squared_diff");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return s;
}

/// || D(s_enh) - s_pseudo ||_2^2, evaluated on the denoiser's linear output.
inline double loss_recon(const Denoiser& d, const TripletSample& sample) {
    return sum_squared_diff(d.denoise_linear(sample.s_enh), sample.s_pseudo);
}

/// || D(s_ne) - s_enh ||_2^2: keep the output of the twice-corrupted input
/// close to the once-corrupted image.
inline double loss_reg(const Denoiser& d, const TripletSample& sample) {
    return sum_squared_diff(d.denoise_linear(sample.s_ne), sample.s_enh);
}

inline double loss_total(const Denoiser& d, const TripletSample& sample, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("loss_total: lambda must be >= 0");
    return lambda * loss_recon(d, sample) + loss_reg(d, sample);
}

namespace detail {

// Quadratic form of the total loss for one sample in the bank weights:
// loss(w) = w'Aw - 2 b'w + c, split so the recon and reg parts can be
// reported separately.
struct SampleQuadratic {
    std::vector<double> gram_recon, gram_reg;  // K x K, row-major
    std::vector<double> lin_recon, lin_reg;    // K
    double const_recon = 0.0, const_reg = 0.0;

    double eval_recon(const std::vector<double>& w) const {
        return eval(gram_recon, lin_recon, const_recon, w);
    }
    double eval_reg(const std::vector<double>& w) const {
        return eval(gram_reg, lin_reg, const_reg, w);
    }

    static double eval(const std::vector<double>& gram, const std::vector<double>& lin,
                       double cst, const std::vector<double>& w) {
        const std::size_t k = w.size();
        double q = cst;
        for (std::size_t i = 0; i < k; ++i) {
            q -= 2.0 * lin[i] * w[i];
            for (std::size_t j = 0; j < k; ++j) q += w[i] * gram[i * k + j] * w[j];
        }
        return q;
    }
};

inline SampleQuadratic build_sample_quadratic(const KernelBankDenoiser& bank,
                                              const TripletSample& sample) {
    const std::size_t k = bank.bank_size();
    const std::vector<ImageTensor> resp_enh = bank.responses(sample.s_enh);
    const std::vector<ImageTensor> resp_ne = bank.responses(sample.s_ne);

    SampleQuadratic q;
    q.gram_recon.assign(k * k, 0.0);
    q.gram_reg.assign(k * k, 0.0);
    q.lin_recon.assign(k, 0.0);
    q.lin_reg.assign(k, 0.0);

    const auto dot = [](const ImageTensor& a, const ImageTensor& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
        return s;
    };

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            const double ge = dot(resp_enh[i], resp_enh[j]);
            const double gn = dot(resp_ne[i], resp_ne[j]);
            q.gram_recon[i * k + j] = q.gram_recon[j * k + i] = ge;
            q.gram_reg[i * k + j] = q.gram_reg[j * k + i] = gn;
        }
        q.lin_recon[i] = dot(resp_enh[i], sample.s_pseudo);
        q.lin_reg[i] = dot(resp_ne[i], sample.s_enh);
    }
    q.const_recon = dot(sample.s_pseudo, sample.s_pseudo);
    q.const_reg = dot(sample.s_enh, sample.s_enh);
    return q;
}

}  // namespace detail

/// Analytic gradient of loss_total with respect to the bank weights.
inline std::vector<double> loss_total_grad(const KernelBankDenoiser& bank,
                                           const TripletSample& sample, double lambda) {
    const std::size_t k = bank.bank_size();
    const detail::SampleQuadratic q = detail::build_sample_quadratic(bank, sample);
    const std::vector<double>& w = bank.weights();
    std::vector<double> grad(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double g = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            g += 2.0 * (lambda * q.gram_recon[i * k + j] + q.gram_reg[i * k + j]) * w[j];
        }
        g -= 2.0 * (lambda * q.lin_recon[i] + q.lin_reg[i]);
        grad[i] = g;
    }
    return grad;
}

struct EpochLoss {
    int epoch = 0;
    double recon = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

struct FinetuneResult {
    KernelBankDenoiser denoiser;
    std::vector<EpochLoss> epoch_losses;
    double initial_loss = 0.0;
};

/// Full-batch gradient descent on the mean total loss. Each epoch regenerates
/// the twice-corrupted inputs from cfg.noise with a derived seed, rebuilds the
/// (quadratic) objective, and descends until the gradient vanishes or the step
/// cap is hit. The step length is cfg.learning_rate on a per-element-mean
/// scaling of the objective, which keeps it independent of image size.
inline FinetuneResult finetune(const KernelBankDenoiser& d, std::vector<TripletSample> data,
                               const FinetuneConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("finetune: empty training set");

    const std::size_t k = d.bank_size();
    const double n_inv = 1.0 / static_cast<double>(data.size());

    double mean_elems = 0.0;
    for (const auto& s : data) mean_elems += static_cast<double>(s.s_enh.size());
    mean_elems *= n_inv;

    FinetuneResult result{d, {}, 0.0};
    std::vector<double> w = d.weights();

    int rises = 0;
    double prev_total = 0.0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::uint64_t epoch_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch));

        // Aggregate quadratic: mean over samples of lambda*recon + reg.
        std::vector<double> a(k * k, 0.0), b(k, 0.0);
        std::vector<detail::SampleQuadratic> quads;
        quads.reserve(data.size());
        for (std::size_t j = 0; j < data.size(); ++j) {
            NoiseField nf = cfg.noise;
            nf.seed = derive_seed(epoch_seed, static_cast<std::uint64_t>(j));
            data[j].s_ne = add_noise(data[j].s_enh, nf);
            quads.push_back(detail::build_sample_quadratic(result.denoiser, data[j]));
            const auto& q = quads.back();
            for (std::size_t i = 0; i < k * k; ++i) {
                a[i] += (cfg.lambda * q.gram_recon[i] + q.gram_reg[i]) * n_inv;
            }
            for (std::size_t i = 0; i < k; ++i) {
                b[i] += (cfg.lambda * q.lin_recon[i] + q.lin_reg[i]) * n_inv;
            }
        }

        const auto mean_losses = [&](const std::vector<double>& wt) {
            EpochLoss loss{epoch, 0.0, 0.0, 0.0};
            for (const auto& q : quads) {
                loss.recon += q.eval_recon(wt) * n_inv;
                loss.reg += q.eval_reg(wt) * n_inv;
            }
            loss.total = cfg.lambda * loss.recon + loss.reg;
            return loss;
        };

        if (epoch == 1) result.initial_loss = mean_losses(w).total;

        std::vector<double> grad(k, 0.0);
        for (int step = 0; step < cfg.max_steps_per_epoch; ++step) {
            double gmax = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                double g = -b[i];
                for (std::size_t j = 0; j < k; ++j) g += a[i * k + j] * w[j];
                grad[i] = 2.0 * g / mean_elems;
                gmax = std::max(gmax, std::abs(grad[i]));
            }
            if (gmax < cfg.grad_tolerance) break;
            for (std::size_t i = 0; i < k; ++i) {
                w[i] -= cfg.learning_rate * grad[i];
                if (!std::isfinite(w[i])) {
                    throw NumericalError("finetune: weights diverged at epoch " +
                                         std::to_string(epoch) + ", step " + std::to_string(step));
                }
            }
        }

        const EpochLoss loss = mean_losses(w);
        if (!std::isfinite(loss.total)) {
            throw NumericalError("finetune: non-finite loss at epoch " + std::to_string(epoch));
        }
        if (epoch > 1 && loss.total > prev_total) {
            if (++rises >= 3) {
                throw NumericalError("finetune: loss increased for 3 consecutive epochs (last " +
                                     std::to_string(loss.total) + "); lower the learning rate");
            }
        } else {
            rises = 0;
        }
        prev_total = loss.total;
        result.epoch_losses.push_back(loss);
    }

    result.denoiser.set_weights(w);
    return result;
}

}  // namespace relight
