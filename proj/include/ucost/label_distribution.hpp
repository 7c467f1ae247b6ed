#ifndef UCOST_LABEL_DISTRIBUTION_HPP
#define UCOST_LABEL_DISTRIBUTION_HPP

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucost/detail/softmax.hpp"

namespace ucost {

enum class LabelFamily { OneHot, ThreePixel, Gaussian, Laplacian };

inline const char* to_string(LabelFamily f) {
    switch (f) {
        case LabelFamily::OneHot: return "one-hot";
        case LabelFamily::ThreePixel: return "three-pixel";
        case LabelFamily::Gaussian: return "gaussian";
        case LabelFamily::Laplacian: return "laplacian";
    }
    return "?";
}

/// Recipe for the target distribution placed around a ground-truth
/// disparity: which density to discretize and its scale. Defaults put one
/// pixel of spread on the smooth families, keeping almost all mass within
/// the 3 px band the error metrics care about.
class LabelKind {
public:
    static LabelKind one_hot() { return LabelKind(LabelFamily::OneHot); }

    static LabelKind three_pixel(double w0 = 0.5, double w1 = 0.2, double w2 = 0.05) {
        if (!(w0 > 0.0) || !(w0 >= w1) || !(w1 >= w2) || !(w2 >= 0.0)) {
            throw std::domain_error(
                "LabelKind: three-pixel weights must satisfy w0 >= w1 >= w2 >= 0 and w0 > 0");
        }
        LabelKind k(LabelFamily::ThreePixel);
        k.weights_ = {w0, w1, w2};
        return k;
    }

    static LabelKind gaussian(double sigma = 1.0) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw std::domain_error("LabelKind: gaussian sigma must be positive");
        }
        LabelKind k(LabelFamily::Gaussian);
        k.scale_ = sigma;
        return k;
    }

    static LabelKind laplacian(double scale = 1.0) {
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw std::domain_error("LabelKind: laplacian scale must be positive");
        }
        LabelKind k(LabelFamily::Laplacian);
        k.scale_ = scale;
        return k;
    }

    LabelFamily family() const { return family_; }
    double sigma() const { return scale_; }
    double scale() const { return scale_; }
    const std::array<double, 3>& weights() const { return weights_; }

private:
    explicit LabelKind(LabelFamily f) : family_(f) {}

    LabelFamily family_;
    double scale_ = 1.0;
    std::array<double, 3> weights_{0.5, 0.2, 0.05};
};

/// Discrete target distribution over disparities 0..d_max: nonnegative,
/// sums to 1, unimodal with the peak at (rounded) ground truth.
struct LabelDistribution {
    int d_max = 0;
    std::vector<double> phi;
};

/// Round-half-to-even, the tie rule used when snapping sub-pixel ground
/// truth to an integer bin.
inline double round_half_to_even(double v) {
    return std::nearbyint(v);
}

namespace detail {

inline void require_gt_in_range(const char* op, double d_gt, int d_max) {
    if (d_max < 1) {
        throw std::domain_error(std::string(op) + ": d_max must be >= 1");
    }
    if (!std::isfinite(d_gt) || d_gt < 0.0 || d_gt > static_cast<double>(d_max)) {
        throw std::domain_error(std::string(op) + ": ground truth " + std::to_string(d_gt) +
                                " outside [0, " + std::to_string(d_max) + "]");
    }
}

}  // namespace detail

/// All mass on the bin nearest the ground truth (half-to-even ties).
inline LabelDistribution one_hot_label(double d_gt, int d_max) {
    detail::require_gt_in_range("one_hot_label", d_gt, d_max);
    LabelDistribution out{d_max, std::vector<double>(d_max + 1, 0.0)};
    out.phi[static_cast<int>(round_half_to_even(d_gt))] = 1.0;
    return out;
}

/// Weight w_j on every bin at integer distance j in {0,1,2} from the
/// rounded ground truth, renormalized so truncation at the volume edges
/// never leaks mass.
inline LabelDistribution three_pixel_label(double d_gt, int d_max,
                                           const std::array<double, 3>& weights = {0.5, 0.2,
                                                                                   0.05}) {
    detail::require_gt_in_range("three_pixel_label", d_gt, d_max);
    if (!(weights[0] > 0.0) || !(weights[0] >= weights[1]) || !(weights[1] >= weights[2]) ||
        !(weights[2] >= 0.0)) {
        throw std::domain_error(
            "three_pixel_label: weights must satisfy w0 >= w1 >= w2 >= 0 and w0 > 0");
    }
    const int center = static_cast<int>(round_half_to_even(d_gt));
    LabelDistribution out{d_max, std::vector<double>(d_max + 1, 0.0)};
    double mass = 0.0;
    for (int i = 0; i <= d_max; ++i) {
        const int j = std::abs(i - center);
        if (j <= 2) {
            out.phi[i] = weights[j];
            mass += weights[j];
        }
    }
    if (!(mass > 0.0)) {
        throw std::domain_error("three_pixel_label: zero total mass");  // unreachable with w0 > 0
    }
    for (double& p : out.phi) p /= mass;
    return out;
}

/// Discretized Gaussian centered at the (possibly sub-pixel) ground truth:
/// phi_i = softmax over i of -(i - d_gt)^2 / (2 sigma^2).
inline LabelDistribution gaussian_label(double d_gt, int d_max, double sigma) {
    detail::require_gt_in_range("gaussian_label", d_gt, d_max);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::domain_error("gaussian_label: sigma must be positive");
    }
    LabelDistribution out{d_max, std::vector<double>(d_max + 1, 0.0)};
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int i = 0; i <= d_max; ++i) {
        const double r = i - d_gt;
        out.phi[i] = -r * r * inv;
    }
    detail::softmax_in_place(out.phi);
    return out;
}

/// Discretized Laplacian: phi_i = softmax over i of -|i - d_gt| / scale.
inline LabelDistribution laplacian_label(double d_gt, int d_max, double scale) {
    detail::require_gt_in_range("laplacian_label", d_gt, d_max);
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::domain_error("laplacian_label: scale must be positive");
    }
    LabelDistribution out{d_max, std::vector<double>(d_max + 1, 0.0)};
    for (int i = 0; i <= d_max; ++i) {
        out.phi[i] = -std::abs(i - d_gt) / scale;
    }
    detail::softmax_in_place(out.phi);
    return out;
}

inline LabelDistribution make_label(const LabelKind& kind, double d_gt, int d_max) {
    switch (kind.family()) {
        case LabelFamily::OneHot: return one_hot_label(d_gt, d_max);
        case LabelFamily::ThreePixel: return three_pixel_label(d_gt, d_max, kind.weights());
        case LabelFamily::Gaussian: return gaussian_label(d_gt, d_max, kind.sigma());
        case LabelFamily::Laplacian: return laplacian_label(d_gt, d_max, kind.scale());
    }
    throw std::logic_error("make_label: unknown family");
}

}  // namespace ucost

#endif  // UCOST_LABEL_DISTRIBUTION_HPP
