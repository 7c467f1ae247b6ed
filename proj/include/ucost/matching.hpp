#ifndef UCOST_MATCHING_HPP
#define UCOST_MATCHING_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ucost/image.hpp"
#include "ucost/parallel.hpp"
#include "ucost/volume.hpp"

namespace ucost {

// Matching cost charged when the disparity shift pushes the right-image
// sample out of frame: the largest intensity difference the images can
// produce.
constexpr double kOutOfBoundsCost = 1.0;

namespace detail {

inline void require_matcher_args(const StereoPair& pair, int d_max, int window) {
    pair.require_matched_shapes();
    if (window < 1 || window % 2 == 0) {
        throw std::invalid_argument("cost volume: window must be odd and >= 1");
    }
    if (d_max < 1 || d_max >= pair.left.width) {
        throw std::domain_error("cost volume: d_max must satisfy 1 <= d_max < width");
    }
}

}  // namespace detail

/// Sum-of-absolute-differences cost volume. c_i(m,n) is the mean absolute
/// intensity difference over a window x window patch between the left image
/// at (m,n) and the right image at (m, n-i). Window taps clamp to the image
/// border; taps whose disparity-shifted column leaves the right image cost
/// kOutOfBoundsCost.
inline CostVolume sad_cost_volume(const StereoPair& pair, int d_max, int window) {
    detail::require_matcher_args(pair, d_max, window);
    const Image& left = pair.left;
    const Image& right = pair.right;
    const int height = left.height, width = left.width;
    const int half = window / 2;
    const double inv_taps = 1.0 / (window * window);

    CostVolume volume(height, width, d_max);
    parallel_for(static_cast<std::size_t>(height), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t m = lo; m < hi; ++m) {
            for (int n = 0; n < width; ++n) {
                auto costs = volume.row(static_cast<int>(m), n);
                for (int i = 0; i <= d_max; ++i) {
                    double sum = 0.0;
                    for (int dm = -half; dm <= half; ++dm) {
                        const int lm = std::clamp(static_cast<int>(m) + dm, 0, height - 1);
                        for (int dn = -half; dn <= half; ++dn) {
                            const int ln = std::clamp(n + dn, 0, width - 1);
                            const int rn = ln - i;
                            sum += (rn >= 0 && rn < width)
                                       ? std::abs(left.at(lm, ln) - right.at(lm, rn))
                                       : kOutOfBoundsCost;
                        }
                    }
                    costs[i] = sum * inv_taps;
                }
            }
        }
    });
    return volume;
}

/// Census descriptor per pixel: one bit per window neighbor (row-major,
/// center excluded), set when the neighbor is darker than the center.
/// Neighbors clamp to the border. Window is limited to 7 so descriptors fit
/// in 64 bits.
inline std::vector<std::uint64_t> census_transform(const Image& img, int window) {
    if (window < 1 || window % 2 == 0 || window > 7) {
        throw std::invalid_argument("census_transform: window must be odd, 1 <= window <= 7");
    }
    const int half = window / 2;
    std::vector<std::uint64_t> desc(static_cast<std::size_t>(img.height) * img.width, 0);
    parallel_for(static_cast<std::size_t>(img.height), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t m = lo; m < hi; ++m) {
            for (int n = 0; n < img.width; ++n) {
                const double center = img.at(static_cast<int>(m), n);
                std::uint64_t bits = 0;
                for (int dm = -half; dm <= half; ++dm) {
                    for (int dn = -half; dn <= half; ++dn) {
                        if (dm == 0 && dn == 0) continue;
                        bits <<= 1;
                        if (img.at_clamped(static_cast<int>(m) + dm, n + dn) < center) {
                            bits |= 1;
                        }
                    }
                }
                desc[m * img.width + n] = bits;
            }
        }
    });
    return desc;
}

/// Census cost volume: Hamming distance between left/right census
/// descriptors, divided by the bit count so costs live in [0, 1].
inline CostVolume census_cost_volume(const StereoPair& pair, int d_max, int window) {
    detail::require_matcher_args(pair, d_max, window);
    if (window > 7) {
        throw std::invalid_argument("census_cost_volume: window must be <= 7");
    }
    const int height = pair.left.height, width = pair.left.width;
    const std::vector<std::uint64_t> left_desc = census_transform(pair.left, window);
    const std::vector<std::uint64_t> right_desc = census_transform(pair.right, window);
    const int bit_count = window * window - 1;
    const double inv_bits = bit_count > 0 ? 1.0 / bit_count : 0.0;  // window 1 has no bits

    CostVolume volume(height, width, d_max);
    parallel_for(static_cast<std::size_t>(height), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t m = lo; m < hi; ++m) {
            for (int n = 0; n < width; ++n) {
                auto costs = volume.row(static_cast<int>(m), n);
                const std::uint64_t dl = left_desc[m * width + n];
                for (int i = 0; i <= d_max; ++i) {
                    const int rn = n - i;
                    costs[i] = rn >= 0
                                   ? std::popcount(dl ^ right_desc[m * width + rn]) * inv_bits
                                   : kOutOfBoundsCost;
                }
            }
        }
    });
    return volume;
}

}  // namespace ucost

#endif  // UCOST_MATCHING_HPP
