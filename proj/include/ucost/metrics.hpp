#ifndef UCOST_METRICS_HPP
#define UCOST_METRICS_HPP

#include <charconv>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucost/image.hpp"
#include "ucost/volume.hpp"

namespace ucost {

/// Disparity error summary over the evaluated pixels (valid in both maps).
/// d1_bg / d1_fg appear only when a foreground mask was supplied and the
/// region is non-empty.
struct MetricsReport {
    double three_px_error = 0.0;  // fraction with |err| > 3 px
    double epe = 0.0;             // mean |err| in pixels
    double d1_all = 0.0;          // fraction of D1 outliers
    std::optional<double> d1_bg;
    std::optional<double> d1_fg;
    std::size_t evaluated_pixels = 0;
};

/// Cost-volume shape summary over supervised pixels. A pixel counts as
/// unimodal when its probability row has exactly one local maximum above
/// the 0.05 mass floor; coherence is the mean total variation along the
/// disparity axis (0 = flat, 2 = worst-case oscillation).
struct ShapeDiagnostics {
    double unimodal_fraction = 0.0;
    double peak_mass = 0.0;
    double coherence = 0.0;
    std::size_t evaluated_pixels = 0;
};

constexpr double kUnimodalMassFloor = 0.05;

/// Local maxima above the mass floor: entries strictly greater than both
/// neighbors (boundary entries compare against their single neighbor).
inline int count_local_maxima(std::span<const double> row, double mass_floor = kUnimodalMassFloor) {
    const int bins = static_cast<int>(row.size());
    int maxima = 0;
    for (int i = 0; i < bins; ++i) {
        if (!(row[i] > mass_floor)) continue;
        const bool left_ok = i == 0 || row[i] > row[i - 1];
        const bool right_ok = i == bins - 1 || row[i] > row[i + 1];
        if (left_ok && right_ok) ++maxima;
    }
    return maxima;
}

namespace detail {

inline void require_same_shape_maps(const char* op, const DisparityMap& pred,
                                    const DisparityMap& gt) {
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
}

}  // namespace detail

/// Fraction of evaluated pixels whose absolute error strictly exceeds 3 px.
/// An error of exactly 3.0 is not an outlier.
inline double three_px_error(const DisparityMap& pred, const DisparityMap& gt) {
    detail::require_same_shape_maps("three_px_error", pred, gt);
    std::size_t evaluated = 0, outliers = 0;
    for (std::size_t k = 0; k < gt.values.size(); ++k) {
        if (gt.valid[k] == 0 || pred.valid[k] == 0) continue;
        ++evaluated;
        if (std::abs(pred.values[k] - gt.values[k]) > 3.0) ++outliers;
    }
    if (evaluated == 0) {
        throw std::domain_error("three_px_error: empty supervision (no valid pixels)");
    }
    return static_cast<double>(outliers) / static_cast<double>(evaluated);
}

/// KITTI-style D1 metrics. A pixel is an outlier when its error exceeds
/// 3 px AND 5% of the ground-truth magnitude. The optional foreground mask
/// splits d1 into bg/fg; d1_all always covers every evaluated pixel.
inline MetricsReport d1_metrics(const DisparityMap& pred, const DisparityMap& gt,
                                const Mask* fg_mask = nullptr) {
    detail::require_same_shape_maps("d1_metrics", pred, gt);
    if (fg_mask && (fg_mask->height != gt.height || fg_mask->width != gt.width)) {
        throw std::invalid_argument("d1_metrics: fg mask shape mismatch");
    }

    std::size_t evaluated = 0, three_px = 0, outliers = 0;
    std::size_t bg_total = 0, bg_out = 0, fg_total = 0, fg_out = 0;
    double err_sum = 0.0;
    for (std::size_t k = 0; k < gt.values.size(); ++k) {
        if (gt.valid[k] == 0 || pred.valid[k] == 0) continue;
        ++evaluated;
        const double err = std::abs(pred.values[k] - gt.values[k]);
        err_sum += err;
        if (err > 3.0) ++three_px;
        const bool outlier = err > 3.0 && err > 0.05 * std::abs(gt.values[k]);
        if (outlier) ++outliers;
        if (fg_mask) {
            const bool fg = fg_mask->on[k] != 0;
            (fg ? fg_total : bg_total) += 1;
            if (outlier) (fg ? fg_out : bg_out) += 1;
        }
    }
    if (evaluated == 0) {
        throw std::domain_error("d1_metrics: empty supervision (no valid pixels)");
    }

    MetricsReport report;
    report.evaluated_pixels = evaluated;
    report.three_px_error = static_cast<double>(three_px) / static_cast<double>(evaluated);
    report.epe = err_sum / static_cast<double>(evaluated);
    report.d1_all = static_cast<double>(outliers) / static_cast<double>(evaluated);
    if (fg_mask) {
        if (bg_total > 0) report.d1_bg = static_cast<double>(bg_out) / static_cast<double>(bg_total);
        if (fg_total > 0) report.d1_fg = static_cast<double>(fg_out) / static_cast<double>(fg_total);
    }
    return report;
}

/// Softmaxes the volume at every supervised pixel and summarizes the row
/// shapes. With no supervised pixels the report is all zeros.
inline ShapeDiagnostics shape_diagnostics(const CostVolume& volume, const DisparityMap& gt) {
    if (gt.height != volume.height() || gt.width != volume.width()) {
        throw std::invalid_argument("shape_diagnostics: volume/gt shape mismatch");
    }
    const int bins = volume.bins();
    std::vector<double> probs(bins);
    std::size_t evaluated = 0, unimodal = 0;
    double peak_sum = 0.0, tv_sum = 0.0;
    for (std::size_t p = 0; p < volume.pixel_count(); ++p) {
        if (gt.valid[p] == 0) continue;
        auto costs = volume.row(p);
        if (!detail::row_finite(costs)) {
            detail::throw_non_finite("shape_diagnostics", volume, p);
        }
        for (int i = 0; i < bins; ++i) probs[i] = -costs[i];
        detail::softmax_in_place(probs);

        ++evaluated;
        if (count_local_maxima(probs) == 1) ++unimodal;
        double peak = probs[0], tv = 0.0;
        for (int i = 1; i < bins; ++i) {
            peak = probs[i] > peak ? probs[i] : peak;
            tv += std::abs(probs[i] - probs[i - 1]);
        }
        peak_sum += peak;
        tv_sum += tv;
    }

    ShapeDiagnostics diag;
    diag.evaluated_pixels = evaluated;
    if (evaluated > 0) {
        diag.unimodal_fraction = static_cast<double>(unimodal) / static_cast<double>(evaluated);
        diag.peak_mass = peak_sum / static_cast<double>(evaluated);
        diag.coherence = tv_sum / static_cast<double>(evaluated);
    }
    return diag;
}

namespace detail {

// Shortest decimal form that parses back to exactly the same double.
inline std::string format_full(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Flat key-value rendering; absent bg/fg lines are omitted.
inline std::string to_kv_text(const MetricsReport& r) {
    std::string out;
    out += "three_px_error = " + detail::format_full(r.three_px_error) + "\n";
    out += "epe = " + detail::format_full(r.epe) + "\n";
    out += "d1_all = " + detail::format_full(r.d1_all) + "\n";
    if (r.d1_bg) out += "d1_bg = " + detail::format_full(*r.d1_bg) + "\n";
    if (r.d1_fg) out += "d1_fg = " + detail::format_full(*r.d1_fg) + "\n";
    out += "evaluated_pixels = " + std::to_string(r.evaluated_pixels) + "\n";
    return out;
}

inline std::string metrics_csv_header() {
    return "three_px_error,epe,d1_all,d1_bg,d1_fg,evaluated_pixels";
}

/// One CSV row per evaluated map; absent bg/fg fields stay empty.
inline std::string to_csv_row(const MetricsReport& r) {
    std::string out = detail::format_full(r.three_px_error) + "," + detail::format_full(r.epe) +
                      "," + detail::format_full(r.d1_all) + ",";
    if (r.d1_bg) out += detail::format_full(*r.d1_bg);
    out += ",";
    if (r.d1_fg) out += detail::format_full(*r.d1_fg);
    out += "," + std::to_string(r.evaluated_pixels);
    return out;
}

inline std::string to_kv_text(const ShapeDiagnostics& d) {
    std::string out;
    out += "unimodal_fraction = " + detail::format_full(d.unimodal_fraction) + "\n";
    out += "peak_mass = " + detail::format_full(d.peak_mass) + "\n";
    out += "coherence = " + detail::format_full(d.coherence) + "\n";
    out += "evaluated_pixels = " + std::to_string(d.evaluated_pixels) + "\n";
    return out;
}

}  // namespace ucost

#endif  // UCOST_METRICS_HPP
