#ifndef UCOST_IMAGE_HPP
#define UCOST_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ucost {

/// Grayscale image, row-major, intensities in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, double fill = 0.0) : height(h), width(w) {
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("Image: dimensions must be positive");
        }
        data.assign(static_cast<std::size_t>(h) * w, fill);
    }

    double& at(int m, int n) { return data[static_cast<std::size_t>(m) * width + n]; }
    double at(int m, int n) const { return data[static_cast<std::size_t>(m) * width + n]; }

    // Replicate-border access.
    double at_clamped(int m, int n) const {
        m = std::clamp(m, 0, height - 1);
        n = std::clamp(n, 0, width - 1);
        return at(m, n);
    }

    // Linear interpolation along the column axis within row m; x is clamped
    // to [0, width - 1].
    double sample_linear_x(int m, double x) const {
        x = std::clamp(x, 0.0, static_cast<double>(width - 1));
        const int n0 = static_cast<int>(std::floor(x));
        const int n1 = std::min(n0 + 1, width - 1);
        const double t = x - n0;
        return (1.0 - t) * at(m, n0) + t * at(m, n1);
    }

    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width;
    }
};

/// Rectified stereo pair: corresponding points share a row. The
/// rectification itself is assumed, not checked.
struct StereoPair {
    Image left;
    Image right;

    void require_matched_shapes() const {
        if (!left.same_shape(right)) {
            throw std::invalid_argument("StereoPair: left/right dimensions differ");
        }
    }
};

/// Boolean per-pixel mask (nonzero = on), row-major.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> on;

    Mask() = default;
    Mask(int h, int w, bool fill = false) : height(h), width(w) {
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("Mask: dimensions must be positive");
        }
        on.assign(static_cast<std::size_t>(h) * w, fill ? 1 : 0);
    }

    bool at(int m, int n) const { return on[static_cast<std::size_t>(m) * width + n] != 0; }
    void set(int m, int n, bool v) { on[static_cast<std::size_t>(m) * width + n] = v ? 1 : 0; }
};

}  // namespace ucost

#endif  // UCOST_IMAGE_HPP
