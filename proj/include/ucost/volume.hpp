#ifndef UCOST_VOLUME_HPP
#define UCOST_VOLUME_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucost/detail/softmax.hpp"
#include "ucost/parallel.hpp"

namespace ucost {

/// Dense matching-cost volume: one real cost per (row m, column n,
/// disparity candidate i) with i in 0..d_max inclusive. Lower cost means a
/// better match. Layout is pixel-major with the disparity axis contiguous,
/// so per-pixel reductions run over adjacent memory.
class CostVolume {
public:
    CostVolume() = default;
    CostVolume(int height, int width, int d_max, double fill = 0.0)
        : height_(height), width_(width), d_max_(d_max) {
        if (height <= 0 || width <= 0) {
            throw std::invalid_argument("CostVolume: dimensions must be positive");
        }
        if (d_max < 1) {
            throw std::invalid_argument("CostVolume: d_max must be >= 1");
        }
        values_.assign(static_cast<std::size_t>(height) * width * (d_max + 1), fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int d_max() const { return d_max_; }
    int bins() const { return d_max_ + 1; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

    double& at(int m, int n, int i) { return values_[index(m, n, i)]; }
    double at(int m, int n, int i) const { return values_[index(m, n, i)]; }

    std::span<double> row(int m, int n) {
        return {values_.data() + index(m, n, 0), static_cast<std::size_t>(bins())};
    }
    std::span<const double> row(int m, int n) const {
        return {values_.data() + index(m, n, 0), static_cast<std::size_t>(bins())};
    }
    std::span<double> row(std::size_t pixel) {
        return {values_.data() + pixel * bins(), static_cast<std::size_t>(bins())};
    }
    std::span<const double> row(std::size_t pixel) const {
        return {values_.data() + pixel * bins(), static_cast<std::size_t>(bins())};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t index(int m, int n, int i) const {
        return (static_cast<std::size_t>(m) * width_ + n) * bins() + i;
    }

    int height_ = 0;
    int width_ = 0;
    int d_max_ = 0;
    std::vector<double> values_;
};

/// Per-pixel softmax of negated costs; every row sums to 1 and every entry
/// is strictly positive. Shares the CostVolume layout.
class ProbabilityVolume {
public:
    ProbabilityVolume() = default;
    ProbabilityVolume(int height, int width, int d_max)
        : height_(height), width_(width), d_max_(d_max) {
        if (height <= 0 || width <= 0 || d_max < 1) {
            throw std::invalid_argument("ProbabilityVolume: bad dimensions");
        }
        probs_.assign(static_cast<std::size_t>(height) * width * (d_max + 1), 0.0);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int d_max() const { return d_max_; }
    int bins() const { return d_max_ + 1; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

    double at(int m, int n, int i) const { return probs_[index(m, n, i)]; }

    std::span<double> row(int m, int n) {
        return {probs_.data() + index(m, n, 0), static_cast<std::size_t>(bins())};
    }
    std::span<const double> row(int m, int n) const {
        return {probs_.data() + index(m, n, 0), static_cast<std::size_t>(bins())};
    }

    std::vector<double>& values() { return probs_; }
    const std::vector<double>& values() const { return probs_; }

private:
    std::size_t index(int m, int n, int i) const {
        return (static_cast<std::size_t>(m) * width_ + n) * bins() + i;
    }

    int height_ = 0;
    int width_ = 0;
    int d_max_ = 0;
    std::vector<double> probs_;
};

/// Real-valued disparity per pixel plus a validity mask. Ground truth is
/// typically sparse; predicted maps are dense with every pixel valid.
struct DisparityMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int h, int w, double value = 0.0, bool all_valid = true)
        : height(h), width(w) {
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("DisparityMap: dimensions must be positive");
        }
        values.assign(static_cast<std::size_t>(h) * w, value);
        valid.assign(static_cast<std::size_t>(h) * w, all_valid ? 1 : 0);
    }

    double value_at(int m, int n) const { return values[static_cast<std::size_t>(m) * width + n]; }
    bool is_valid(int m, int n) const { return valid[static_cast<std::size_t>(m) * width + n] != 0; }
    void set(int m, int n, double v, bool ok = true) {
        const std::size_t k = static_cast<std::size_t>(m) * width + n;
        values[k] = v;
        valid[k] = ok ? 1 : 0;
    }

    std::size_t valid_count() const {
        std::size_t c = 0;
        for (std::uint8_t v : valid) c += v != 0;
        return c;
    }

    bool same_shape(const DisparityMap& other) const {
        return height == other.height && width == other.width;
    }
};

namespace detail {

// Records the first pixel (scan order) holding a non-finite cost; workers
// may race but the min keeps the report deterministic enough to be useful.
inline void note_bad_pixel(std::atomic<std::size_t>& slot, std::size_t pixel) {
    std::size_t cur = slot.load();
    while (pixel < cur && !slot.compare_exchange_weak(cur, pixel)) {
    }
}

[[noreturn]] inline void throw_non_finite(const char* op, const CostVolume& volume,
                                          std::size_t pixel) {
    const int m = static_cast<int>(pixel / volume.width());
    const int n = static_cast<int>(pixel % volume.width());
    throw std::domain_error(std::string(op) + ": non-finite cost at pixel (" +
                            std::to_string(m) + ", " + std::to_string(n) + ")");
}

inline bool row_finite(std::span<const double> row) {
    for (double c : row) {
        if (!std::isfinite(c)) return false;
    }
    return true;
}

}  // namespace detail

/// Softmax of the negated costs, pixel by pixel. Mathematically equal to
/// exp(-c_i) / sum_j exp(-c_j); computed with a max shift so large costs do
/// not overflow.
inline ProbabilityVolume softmax_neg_cost(const CostVolume& volume) {
    ProbabilityVolume out(volume.height(), volume.width(), volume.d_max());
    std::atomic<std::size_t> bad{static_cast<std::size_t>(-1)};
    const int bins = volume.bins();
    parallel_for(volume.pixel_count(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            auto costs = volume.row(p);
            if (!detail::row_finite(costs)) {
                detail::note_bad_pixel(bad, p);
                continue;
            }
            auto probs = std::span<double>(out.values().data() + p * bins, bins);
            for (int i = 0; i < bins; ++i) probs[i] = -costs[i];
            detail::softmax_in_place(probs);
        }
    });
    if (bad.load() != static_cast<std::size_t>(-1)) {
        detail::throw_non_finite("softmax_neg_cost", volume, bad.load());
    }
    return out;
}

/// Differentiable disparity estimate: dhat = sum_i i * softmax(-c)_i.
/// Always lands in [0, d_max]; the result map is fully valid.
inline DisparityMap softargmin(const CostVolume& volume) {
    DisparityMap out(volume.height(), volume.width(), 0.0, true);
    std::atomic<std::size_t> bad{static_cast<std::size_t>(-1)};
    const int bins = volume.bins();
    parallel_for(volume.pixel_count(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> probs(bins);
        for (std::size_t p = lo; p < hi; ++p) {
            auto costs = volume.row(p);
            if (!detail::row_finite(costs)) {
                detail::note_bad_pixel(bad, p);
                continue;
            }
            for (int i = 0; i < bins; ++i) probs[i] = -costs[i];
            detail::softmax_in_place(probs);
            double d = 0.0;
            for (int i = 0; i < bins; ++i) d += i * probs[i];
            out.values[p] = d;
        }
    });
    if (bad.load() != static_cast<std::size_t>(-1)) {
        detail::throw_non_finite("softargmin", volume, bad.load());
    }
    return out;
}

/// Winner-take-all disparity: the integer index of the minimum cost. Ties
/// break toward the smallest index.
inline DisparityMap wta_argmin(const CostVolume& volume) {
    DisparityMap out(volume.height(), volume.width(), 0.0, true);
    std::atomic<std::size_t> bad{static_cast<std::size_t>(-1)};
    const int bins = volume.bins();
    parallel_for(volume.pixel_count(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            auto costs = volume.row(p);
            if (!detail::row_finite(costs)) {
                detail::note_bad_pixel(bad, p);
                continue;
            }
            int best = 0;
            for (int i = 1; i < bins; ++i) {
                if (costs[i] < costs[best]) best = i;
            }
            out.values[p] = best;
        }
    });
    if (bad.load() != static_cast<std::size_t>(-1)) {
        detail::throw_non_finite("wta_argmin", volume, bad.load());
    }
    return out;
}

}  // namespace ucost

#endif  // UCOST_VOLUME_HPP
