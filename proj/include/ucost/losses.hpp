#ifndef UCOST_LOSSES_HPP
#define UCOST_LOSSES_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ucost/label_distribution.hpp"
#include "ucost/parallel.hpp"
#include "ucost/volume.hpp"

namespace ucost {

enum class RegressionKind { MSE, MAE };

inline const char* to_string(RegressionKind k) {
    return k == RegressionKind::MSE ? "mse" : "mae";
}

/// Two-part training loss: a regression term on the softargmin output plus
/// mu times a cross-entropy regularizer on the cost volume itself.
struct LossConfig {
    RegressionKind regression = RegressionKind::MAE;
    std::optional<LabelKind> noise;  // absent = regression only
    double mu = 0.05;

    void validate() const {
        if (noise && (!(mu > 0.0) || !(mu < 1.0))) {
            throw std::domain_error("LossConfig: mu must lie in (0, 1)");
        }
    }

    // The noise family is meant to mirror the regression norm: squared
    // error pairs with Gaussian noise, absolute error with Laplacian.
    // Cross-pairings run fine, so this only warns.
    std::optional<std::string> pairing_warning() const {
        if (!noise) return std::nullopt;
        const LabelFamily f = noise->family();
        if (f == LabelFamily::Gaussian && regression != RegressionKind::MSE) {
            return "gaussian noise is usually paired with the MSE regression loss";
        }
        if (f == LabelFamily::Laplacian && regression != RegressionKind::MAE) {
            return "laplacian noise is usually paired with the MAE regression loss";
        }
        return std::nullopt;
    }
};

/// Loss breakdown for one evaluation: total = regression_part + mu * noise_part.
struct LossReport {
    double total = 0.0;
    double regression_part = 0.0;
    double noise_part = 0.0;
    std::size_t pixel_count = 0;
};

/// dL/dc_i(m,n) with the CostVolume layout; zero at unsupervised pixels.
class VolumeGradient {
public:
    VolumeGradient() = default;
    VolumeGradient(int height, int width, int d_max)
        : height_(height), width_(width), d_max_(d_max),
          values_(static_cast<std::size_t>(height) * width * (d_max + 1), 0.0) {}

    int height() const { return height_; }
    int width() const { return width_; }
    int d_max() const { return d_max_; }
    int bins() const { return d_max_ + 1; }

    double at(int m, int n, int i) const {
        return values_[(static_cast<std::size_t>(m) * width_ + n) * bins() + i];
    }
    std::span<double> row(int m, int n) {
        return {values_.data() + (static_cast<std::size_t>(m) * width_ + n) * bins(),
                static_cast<std::size_t>(bins())};
    }
    std::span<const double> row(int m, int n) const {
        return {values_.data() + (static_cast<std::size_t>(m) * width_ + n) * bins(),
                static_cast<std::size_t>(bins())};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    int height_ = 0;
    int width_ = 0;
    int d_max_ = 0;
    std::vector<double> values_;
};

namespace detail {

// Pixels counted by the loss: supervised in the ground truth and carrying a
// defined prediction.
inline std::size_t count_supervised(const DisparityMap& pred, const DisparityMap& gt) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < gt.valid.size(); ++k) {
        c += (gt.valid[k] != 0 && pred.valid[k] != 0);
    }
    return c;
}

inline void require_supervision(const char* op, std::size_t n) {
    if (n == 0) {
        throw std::domain_error(std::string(op) + ": empty supervision (no valid pixels)");
    }
}

inline void require_gt_values_in_range(const char* op, const CostVolume& volume,
                                       const DisparityMap& gt) {
    for (int m = 0; m < gt.height; ++m) {
        for (int n = 0; n < gt.width; ++n) {
            if (!gt.is_valid(m, n)) continue;
            const double d = gt.value_at(m, n);
            if (!std::isfinite(d) || d < 0.0 || d > volume.d_max()) {
                throw std::domain_error(std::string(op) + ": ground truth " + std::to_string(d) +
                                        " at pixel (" + std::to_string(m) + ", " +
                                        std::to_string(n) + ") outside [0, " +
                                        std::to_string(volume.d_max()) + "]");
            }
        }
    }
}

}  // namespace detail

constexpr double kLogClampEpsilon = 1e-12;

/// Mean squared / absolute disparity error over supervised pixels.
inline double regression_loss(const DisparityMap& pred, const DisparityMap& gt,
                              RegressionKind kind) {
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument("regression_loss: shape mismatch");
    }
    const std::size_t count = detail::count_supervised(pred, gt);
    detail::require_supervision("regression_loss", count);
    double sum = 0.0;
    for (std::size_t k = 0; k < gt.values.size(); ++k) {
        if (gt.valid[k] == 0 || pred.valid[k] == 0) continue;
        const double err = pred.values[k] - gt.values[k];
        sum += kind == RegressionKind::MSE ? err * err : std::abs(err);
    }
    return sum / static_cast<double>(count);
}

/// -sum_i phi_i log p_i with probabilities clamped at 1e-12 so a vanishing
/// bin cannot produce an infinite loss.
inline double cross_entropy(const LabelDistribution& target, std::span<const double> probs) {
    if (static_cast<std::size_t>(target.d_max) + 1 != probs.size()) {
        throw std::invalid_argument("cross_entropy: target/probs length mismatch");
    }
    double ce = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i] > kLogClampEpsilon ? probs[i] : kLogClampEpsilon;
        ce -= target.phi[i] * std::log(p);
    }
    return ce;
}

/// Mean cross entropy between the per-pixel target distribution built from
/// the ground truth and the softmax of the negated costs. OneHot and
/// ThreePixel kinds give the classic hard and neighbor-smoothed variants;
/// Gaussian and Laplacian give the noise-sampling ones.
inline double noise_sampling_loss(const CostVolume& volume, const DisparityMap& gt,
                                  const LabelKind& kind) {
    if (gt.height != volume.height() || gt.width != volume.width()) {
        throw std::invalid_argument("noise_sampling_loss: volume/gt shape mismatch");
    }
    const std::size_t count = gt.valid_count();
    detail::require_supervision("noise_sampling_loss", count);
    detail::require_gt_values_in_range("noise_sampling_loss", volume, gt);

    const int bins = volume.bins();
    std::vector<double> per_pixel(volume.pixel_count(), 0.0);
    std::atomic<std::size_t> bad{static_cast<std::size_t>(-1)};
    parallel_for(volume.pixel_count(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> probs(bins);
        for (std::size_t p = lo; p < hi; ++p) {
            if (gt.valid[p] == 0) continue;
            auto costs = volume.row(p);
            if (!detail::row_finite(costs)) {
                detail::note_bad_pixel(bad, p);
                continue;
            }
            for (int i = 0; i < bins; ++i) probs[i] = -costs[i];
            detail::softmax_in_place(probs);
            const LabelDistribution label = make_label(kind, gt.values[p], volume.d_max());
            per_pixel[p] = cross_entropy(label, probs);
        }
    });
    if (bad.load() != static_cast<std::size_t>(-1)) {
        detail::throw_non_finite("noise_sampling_loss", volume, bad.load());
    }
    double sum = 0.0;
    for (double v : per_pixel) sum += v;
    return sum / static_cast<double>(count);
}

/// total = regression(softargmin(volume), gt) + mu * noise_sampling_loss.
inline LossReport combined_loss(const CostVolume& volume, const DisparityMap& gt,
                                const LossConfig& config) {
    config.validate();
    LossReport report;
    report.regression_part = regression_loss(softargmin(volume), gt, config.regression);
    report.pixel_count = gt.valid_count();
    if (config.noise) {
        report.noise_part = noise_sampling_loss(volume, gt, *config.noise);
        report.total = report.regression_part + config.mu * report.noise_part;
    } else {
        report.total = report.regression_part;
    }
    return report;
}

// Backward pass, derived per supervised pixel with p = softmax(-c) and
// dhat = sum_j j p_j. From dp_j/dc_l = p_j p_l - p_j [j == l]:
//
//   d(dhat)/dc_l        = sum_j j (p_j p_l - p_j [j==l]) = -p_l (l - dhat)
//   d(-sum_j phi_j log p_j)/dc_l
//                       = -sum_j phi_j (p_l - [j==l]) = phi_l - p_l
//
// The regression term then follows by the chain rule through dhat, with
// d|r|/dr taken as sign(r) (0 at r == 0). Both per-pixel rows sum to zero,
// the gradient-space face of softmax shift invariance. Each mean over
// supervised pixels contributes a 1/count factor.
inline std::pair<LossReport, VolumeGradient> combined_loss_with_gradient(
    const CostVolume& volume, const DisparityMap& gt, const LossConfig& config) {
    config.validate();
    if (gt.height != volume.height() || gt.width != volume.width()) {
        throw std::invalid_argument("combined_loss_gradient: volume/gt shape mismatch");
    }
    const std::size_t count = gt.valid_count();
    detail::require_supervision("combined_loss_gradient", count);
    detail::require_gt_values_in_range("combined_loss_gradient", volume, gt);

    const int bins = volume.bins();
    const double inv_count = 1.0 / static_cast<double>(count);
    VolumeGradient grad(volume.height(), volume.width(), volume.d_max());
    std::vector<double> reg_terms(volume.pixel_count(), 0.0);
    std::vector<double> noise_terms(volume.pixel_count(), 0.0);
    std::atomic<std::size_t> bad{static_cast<std::size_t>(-1)};

    parallel_for(volume.pixel_count(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> probs(bins);
        for (std::size_t p = lo; p < hi; ++p) {
            if (gt.valid[p] == 0) continue;
            auto costs = volume.row(p);
            if (!detail::row_finite(costs)) {
                detail::note_bad_pixel(bad, p);
                continue;
            }
            for (int i = 0; i < bins; ++i) probs[i] = -costs[i];
            detail::softmax_in_place(probs);

            double dhat = 0.0;
            for (int i = 0; i < bins; ++i) dhat += i * probs[i];
            const double residual = dhat - gt.values[p];
            double dloss_ddhat;
            if (config.regression == RegressionKind::MSE) {
                reg_terms[p] = residual * residual;
                dloss_ddhat = 2.0 * residual * inv_count;
            } else {
                reg_terms[p] = std::abs(residual);
                dloss_ddhat =
                    (residual > 0.0 ? 1.0 : residual < 0.0 ? -1.0 : 0.0) * inv_count;
            }

            auto g = std::span<double>(grad.values().data() + p * bins, bins);
            for (int i = 0; i < bins; ++i) {
                g[i] = dloss_ddhat * (-probs[i] * (i - dhat));
            }
            if (config.noise) {
                const LabelDistribution label =
                    make_label(*config.noise, gt.values[p], volume.d_max());
                noise_terms[p] = cross_entropy(label, probs);
                const double w = config.mu * inv_count;
                for (int i = 0; i < bins; ++i) {
                    g[i] += w * (label.phi[i] - probs[i]);
                }
            }
        }
    });
    if (bad.load() != static_cast<std::size_t>(-1)) {
        detail::throw_non_finite("combined_loss_gradient", volume, bad.load());
    }

    LossReport report;
    report.pixel_count = count;
    double reg_sum = 0.0, noise_sum = 0.0;
    for (std::size_t p = 0; p < reg_terms.size(); ++p) {
        reg_sum += reg_terms[p];
        noise_sum += noise_terms[p];
    }
    report.regression_part = reg_sum * inv_count;
    report.noise_part = config.noise ? noise_sum * inv_count : 0.0;
    report.total = report.regression_part + (config.noise ? config.mu * report.noise_part : 0.0);
    return {report, std::move(grad)};
}

/// Analytic gradient of combined_loss with respect to every cost entry.
inline VolumeGradient combined_loss_gradient(const CostVolume& volume, const DisparityMap& gt,
                                             const LossConfig& config) {
    return combined_loss_with_gradient(volume, gt, config).second;
}

/// Central-difference audit of the analytic gradient. Perturbs every cost
/// entry by +/-step and returns the worst relative disagreement, with the
/// denominator floored at 1e-8 so near-zero entries do not blow up the
/// ratio.
inline double finite_difference_check(const CostVolume& volume, const DisparityMap& gt,
                                      const LossConfig& config, double step) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("finite_difference_check: step must be positive");
    }
    const VolumeGradient analytic = combined_loss_gradient(volume, gt, config);
    CostVolume probe = volume;
    double worst = 0.0;
    for (std::size_t k = 0; k < probe.values().size(); ++k) {
        const double saved = probe.values()[k];
        probe.values()[k] = saved + step;
        const double up = combined_loss(probe, gt, config).total;
        probe.values()[k] = saved - step;
        const double down = combined_loss(probe, gt, config).total;
        probe.values()[k] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double an = analytic.values()[k];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

}  // namespace ucost

#endif  // UCOST_LOSSES_HPP
