#ifndef UCOST_SCENE_HPP
#define UCOST_SCENE_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "ucost/detail/rng.hpp"
#include "ucost/image.hpp"
#include "ucost/volume.hpp"

namespace ucost {

enum class DisparityFieldKind { Constant, TwoRegion, Ramp };

inline const char* to_string(DisparityFieldKind k) {
    switch (k) {
        case DisparityFieldKind::Constant: return "constant";
        case DisparityFieldKind::TwoRegion: return "two-region";
        case DisparityFieldKind::Ramp: return "ramp";
    }
    return "?";
}

/// Parameters of a synthetic scene: a seeded random texture warped by a
/// simple disparity field. TwoRegion splits at width/2 (left region takes
/// left_disparity); Ramp interpolates linearly from ramp_start at column 0
/// to ramp_end at the last column. Field values may be sub-pixel.
struct SceneSpec {
    int width = 64;
    int height = 48;
    int d_max = 16;
    DisparityFieldKind field = DisparityFieldKind::Constant;
    double disparity = 0.0;        // Constant
    double left_disparity = 0.0;   // TwoRegion
    double right_disparity = 0.0;  // TwoRegion
    double ramp_start = 0.0;       // Ramp
    double ramp_end = 0.0;         // Ramp

    int region_boundary() const { return width / 2; }

    double ramp_slope() const {
        return width > 1 ? (ramp_end - ramp_start) / static_cast<double>(width - 1) : 0.0;
    }

    double field_value(int /*m*/, int n) const {
        switch (field) {
            case DisparityFieldKind::Constant: return disparity;
            case DisparityFieldKind::TwoRegion:
                return n < region_boundary() ? left_disparity : right_disparity;
            case DisparityFieldKind::Ramp: return ramp_start + ramp_slope() * n;
        }
        return 0.0;
    }

    void validate() const {
        if (width < 2 || height < 1) {
            throw std::domain_error("SceneSpec: need width >= 2 and height >= 1");
        }
        if (d_max < 1 || d_max >= width) {
            throw std::domain_error("SceneSpec: d_max must satisfy 1 <= d_max < width");
        }
        auto check = [&](double v, const char* name) {
            if (!std::isfinite(v) || v < 0.0 || v > static_cast<double>(d_max)) {
                throw std::domain_error(std::string("SceneSpec: ") + name +
                                        " outside [0, d_max]");
            }
        };
        switch (field) {
            case DisparityFieldKind::Constant: check(disparity, "disparity"); break;
            case DisparityFieldKind::TwoRegion:
                check(left_disparity, "left_disparity");
                check(right_disparity, "right_disparity");
                break;
            case DisparityFieldKind::Ramp:
                check(ramp_start, "ramp_start");
                check(ramp_end, "ramp_end");
                // slope 1 would collapse a whole row onto one right pixel
                if (std::abs(ramp_end - ramp_start) >= static_cast<double>(width - 1)) {
                    throw std::domain_error("SceneSpec: ramp too steep");
                }
                break;
        }
    }
};

struct GeneratedScene {
    StereoPair pair;
    DisparityMap ground_truth;
};

namespace detail {

// Seeded value noise with one 3x3 box smoothing pass, so neighboring
// pixels differ but local contrast survives. Pure white noise would make
// census descriptors degenerate.
inline Image textured_image(int height, int width, std::uint64_t seed) {
    Image noise(height, width);
    std::mt19937_64 rng(seed);
    for (double& v : noise.data) v = uniform_unit(rng);
    Image out(height, width);
    for (int m = 0; m < height; ++m) {
        for (int n = 0; n < width; ++n) {
            double sum = 0.0;
            for (int dm = -1; dm <= 1; ++dm) {
                for (int dn = -1; dn <= 1; ++dn) {
                    sum += noise.at_clamped(m + dm, n + dn);
                }
            }
            out.at(m, n) = sum / 9.0;
        }
    }
    return out;
}

// Left pixel n is occluded when some other column with strictly larger
// disparity lands within half a pixel of the same right-image position.
// Constant and ramp fields keep the warp monotone, so only the two-region
// field can fold.
inline bool occluded(const SceneSpec& spec, int n) {
    if (spec.field != DisparityFieldKind::TwoRegion) return false;
    const int boundary = spec.region_boundary();
    const bool in_left = n < boundary;
    const double mine = in_left ? spec.left_disparity : spec.right_disparity;
    const double other = in_left ? spec.right_disparity : spec.left_disparity;
    if (!(other > mine)) return false;
    const double x = n - mine;
    // integer columns u of the other region with |(u - other) - x| < 0.5
    const int u_lo = static_cast<int>(std::ceil(x + other - 0.5 + 1e-12));
    const int u_hi = static_cast<int>(std::floor(x + other + 0.5 - 1e-12));
    for (int u = u_lo; u <= u_hi; ++u) {
        if (u < 0 || u >= spec.width) continue;
        const bool u_in_left = u < boundary;
        if (u_in_left == in_left) continue;
        return true;
    }
    return false;
}

}  // namespace detail

/// Builds the stereo pair and its ground truth. The right image is the
/// left texture warped by the disparity field (closed-form inverse per
/// field kind, linear interpolation for sub-pixel positions). Right columns
/// with no source pixel are filled with independent seeded noise. Ground
/// truth is invalid where the match falls out of frame or is occluded.
inline GeneratedScene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int height = spec.height, width = spec.width;
    const int boundary = spec.region_boundary();

    GeneratedScene scene{{detail::textured_image(height, width, seed), Image(height, width)},
                         DisparityMap(height, width, 0.0, false)};
    const Image& left = scene.pair.left;
    Image& right = scene.pair.right;

    // Right image: source column u on the left for each right column j,
    // solving u - d(u) = j per field kind. Where the two-region field
    // folds, the larger disparity is nearer and wins; revealed columns with
    // no source get independent seeded noise. The sourceless set depends
    // only on the spec, so the fill stream stays deterministic.
    std::mt19937_64 fill_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int m = 0; m < height; ++m) {
        for (int j = 0; j < width; ++j) {
            double u = -1.0;
            bool found = false;
            switch (spec.field) {
                case DisparityFieldKind::Constant: {
                    const double cand = j + spec.disparity;
                    if (cand <= width - 1) {
                        u = cand;
                        found = true;
                    }
                    break;
                }
                case DisparityFieldKind::TwoRegion: {
                    const double u_left = j + spec.left_disparity;
                    const double u_right = j + spec.right_disparity;
                    const bool left_ok = u_left < boundary;
                    const bool right_ok = u_right >= boundary && u_right <= width - 1;
                    if (left_ok && right_ok) {
                        u = spec.left_disparity > spec.right_disparity ? u_left : u_right;
                        found = true;
                    } else if (left_ok) {
                        u = u_left;
                        found = true;
                    } else if (right_ok) {
                        u = u_right;
                        found = true;
                    }
                    break;
                }
                case DisparityFieldKind::Ramp: {
                    const double cand = (j + spec.ramp_start) / (1.0 - spec.ramp_slope());
                    if (cand <= width - 1) {
                        u = cand;
                        found = true;
                    }
                    break;
                }
            }
            if (found && u >= 0.0) {
                right.at(m, j) = left.sample_linear_x(m, u);
            } else {
                right.at(m, j) = detail::uniform_unit(fill_rng);
            }
        }
    }

    // Ground truth on the left image.
    for (int m = 0; m < height; ++m) {
        for (int n = 0; n < width; ++n) {
            const double d = spec.field_value(m, n);
            const double x = n - d;
            const bool in_frame = x >= 0.0 && x <= width - 1;
            const bool valid = in_frame && !detail::occluded(spec, n);
            scene.ground_truth.set(m, n, d, valid);
        }
    }
    return scene;
}

}  // namespace ucost

#endif  // UCOST_SCENE_HPP
