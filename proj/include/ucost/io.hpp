#ifndef UCOST_IO_HPP
#define UCOST_IO_HPP

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucost/image.hpp"
#include "ucost/volume.hpp"

namespace ucost {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(path.string() + ": cannot open for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void store_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error(path.string() + ": write failed");
}

// Byte cursor over a loaded file; parse failures report the offset.
class Cursor {
public:
    Cursor(const std::string& bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    std::size_t offset() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw io_error(name_ + ": " + what + " at byte " + std::to_string(pos_));
    }

    // PNM-style token: skips whitespace and '#' comments.
    std::string token() {
        for (;;) {
            while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
                ++pos_;
            }
            if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
                continue;
            }
            break;
        }
        if (pos_ >= bytes_.size()) fail("unexpected end of header");
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            ++pos_;
        }
        return bytes_.substr(start, pos_ - start);
    }

    long integer(const char* what) {
        const std::string tok = token();
        char* end = nullptr;
        const long v = std::strtol(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0') {
            fail(std::string("expected ") + what + ", got '" + tok + "'");
        }
        return v;
    }

    double real(const char* what) {
        const std::string tok = token();
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') {
            fail(std::string("expected ") + what + ", got '" + tok + "'");
        }
        return v;
    }

    // Exactly one whitespace byte separates the header from the payload.
    void skip_header_terminator() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            fail("expected whitespace after header");
        }
        ++pos_;
    }

    std::span<const char> payload(std::size_t count) {
        if (bytes_.size() - pos_ < count) fail("truncated payload");
        std::span<const char> out(bytes_.data() + pos_, count);
        pos_ += count;
        return out;
    }

private:
    const std::string& bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

inline void append_u16_be(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

inline void append_f32_le(std::string& out, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline void append_f64_le(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline float read_f32_le(std::span<const char> bytes) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) {
        bits = (bits << 8) | static_cast<std::uint8_t>(bytes[b]);
    }
    return std::bit_cast<float>(bits);
}

inline float read_f32_be(std::span<const char> bytes) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
        bits = (bits << 8) | static_cast<std::uint8_t>(bytes[b]);
    }
    return std::bit_cast<float>(bits);
}

inline double read_f64_le(std::span<const char> bytes) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) {
        bits = (bits << 8) | static_cast<std::uint8_t>(bytes[b]);
    }
    return std::bit_cast<double>(bits);
}

// Shortest decimal form that parses back to exactly the same double.
inline std::string full_precision(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PGM (binary P5)

/// 8-bit binary PGM. Intensities quantize with round-half-up to 0..255.
inline void write_pgm(const std::filesystem::path& path, const Image& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    out.reserve(out.size() + img.data.size());
    for (double v : img.data) {
        const double q = std::floor(v * 255.0 + 0.5);
        out.push_back(static_cast<char>(static_cast<int>(std::clamp(q, 0.0, 255.0))));
    }
    detail::store_file(path, out);
}

/// Reads binary PGM with any maxval; intensities scale to [0, 1]. Maxval
/// above 255 uses the standard two-byte big-endian samples.
inline Image read_pgm(const std::filesystem::path& path) {
    const std::string bytes = detail::load_file(path);
    detail::Cursor cur(bytes, path.string());
    if (cur.token() != "P5") cur.fail("expected magic 'P5'");
    const long width = cur.integer("width");
    const long height = cur.integer("height");
    const long maxval = cur.integer("maxval");
    if (width < 1 || height < 1) cur.fail("bad dimensions");
    if (maxval < 1 || maxval > 65535) cur.fail("bad maxval");
    cur.skip_header_terminator();

    Image img(static_cast<int>(height), static_cast<int>(width));
    const std::size_t count = img.data.size();
    if (maxval <= 255) {
        auto payload = cur.payload(count);
        for (std::size_t k = 0; k < count; ++k) {
            img.data[k] = static_cast<std::uint8_t>(payload[k]) / static_cast<double>(maxval);
        }
    } else {
        auto payload = cur.payload(count * 2);
        for (std::size_t k = 0; k < count; ++k) {
            const int hi = static_cast<std::uint8_t>(payload[2 * k]);
            const int lo = static_cast<std::uint8_t>(payload[2 * k + 1]);
            img.data[k] = ((hi << 8) | lo) / static_cast<double>(maxval);
        }
    }
    return img;
}

inline void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
    std::string out = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) +
                      "\n255\n";
    for (std::uint8_t v : mask.on) out.push_back(v ? static_cast<char>(255) : 0);
    detail::store_file(path, out);
}

/// Nonzero bytes are on.
inline Mask read_mask_pgm(const std::filesystem::path& path) {
    const Image img = read_pgm(path);
    Mask mask(img.height, img.width);
    for (std::size_t k = 0; k < img.data.size(); ++k) mask.on[k] = img.data[k] > 0.0 ? 1 : 0;
    return mask;
}

// ---------------------------------------------------------------------------
// PFM (grayscale "Pf")

/// Grayscale PFM: rows bottom-to-top, float32 samples, negative scale for
/// little-endian (the de facto convention). Invalid pixels are written as
/// 0; validity travels in the mask sidecar, since PFM has no sentinel.
inline void write_pfm(const std::filesystem::path& path, const DisparityMap& map) {
    std::string out = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                      "\n-1.0\n";
    out.reserve(out.size() + map.values.size() * 4);
    for (int m = map.height - 1; m >= 0; --m) {
        for (int n = 0; n < map.width; ++n) {
            const std::size_t k = static_cast<std::size_t>(m) * map.width + n;
            const float v = map.valid[k] ? static_cast<float>(map.values[k]) : 0.0f;
            detail::append_f32_le(out, v);
        }
    }
    detail::store_file(path, out);
}

/// Reads grayscale PFM; every pixel comes back valid (apply a sidecar with
/// read_disparity to recover sparsity). Positive scale means big-endian.
inline DisparityMap read_pfm(const std::filesystem::path& path) {
    const std::string bytes = detail::load_file(path);
    detail::Cursor cur(bytes, path.string());
    const std::string magic = cur.token();
    if (magic == "PF") cur.fail("color PFM not supported, expected grayscale 'Pf'");
    if (magic != "Pf") cur.fail("expected magic 'Pf'");
    const long width = cur.integer("width");
    const long height = cur.integer("height");
    const double scale = cur.real("scale");
    if (width < 1 || height < 1) cur.fail("bad dimensions");
    if (scale == 0.0) cur.fail("zero scale");
    cur.skip_header_terminator();

    DisparityMap map(static_cast<int>(height), static_cast<int>(width), 0.0, true);
    const bool little = scale < 0.0;
    auto payload = cur.payload(map.values.size() * 4);
    std::size_t p = 0;
    for (long m = height - 1; m >= 0; --m) {
        for (long n = 0; n < width; ++n) {
            const auto sample = payload.subspan(p, 4);
            p += 4;
            const float v = little ? detail::read_f32_le(sample) : detail::read_f32_be(sample);
            map.values[static_cast<std::size_t>(m) * width + n] = v;
        }
    }
    return map;
}

inline std::filesystem::path mask_sidecar_path(const std::filesystem::path& pfm_path) {
    std::filesystem::path p = pfm_path;
    p.replace_extension(".mask.pgm");
    return p;
}

/// PFM plus the 0/255 mask sidecar that carries validity.
inline void write_disparity(const std::filesystem::path& pfm_path, const DisparityMap& map) {
    write_pfm(pfm_path, map);
    Mask mask(map.height, map.width);
    for (std::size_t k = 0; k < map.valid.size(); ++k) mask.on[k] = map.valid[k];
    write_mask_pgm(mask_sidecar_path(pfm_path), mask);
}

/// Reads a PFM and, when the sidecar exists, applies it as the validity
/// mask. Values and mask must agree on dimensions.
inline DisparityMap read_disparity(const std::filesystem::path& pfm_path) {
    DisparityMap map = read_pfm(pfm_path);
    const std::filesystem::path side = mask_sidecar_path(pfm_path);
    if (std::filesystem::exists(side)) {
        const Mask mask = read_mask_pgm(side);
        if (mask.height != map.height || mask.width != map.width) {
            throw io_error(side.string() + ": mask dimensions disagree with " +
                           pfm_path.string());
        }
        for (std::size_t k = 0; k < map.valid.size(); ++k) map.valid[k] = mask.on[k];
    }
    return map;
}

// ---------------------------------------------------------------------------
// 16-bit fixed-point disparity (optional alternative to PFM)

/// Disparity quantized to 1/256 px in a 16-bit big-endian PGM (maxval
/// 65535), with 0 reserved for invalid pixels, mirroring the common
/// benchmark encoding. Lossy by construction.
inline void write_disparity_fixed16(const std::filesystem::path& path, const DisparityMap& map) {
    std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                      "\n65535\n";
    for (std::size_t k = 0; k < map.values.size(); ++k) {
        double q = 0.0;
        if (map.valid[k]) {
            q = std::clamp(std::floor(map.values[k] * 256.0 + 0.5), 1.0, 65535.0);
        }
        detail::append_u16_be(out, static_cast<std::uint16_t>(q));
    }
    detail::store_file(path, out);
}

inline DisparityMap read_disparity_fixed16(const std::filesystem::path& path) {
    const std::string bytes = detail::load_file(path);
    detail::Cursor cur(bytes, path.string());
    if (cur.token() != "P5") cur.fail("expected magic 'P5'");
    const long width = cur.integer("width");
    const long height = cur.integer("height");
    const long maxval = cur.integer("maxval");
    if (width < 1 || height < 1) cur.fail("bad dimensions");
    if (maxval != 65535) cur.fail("expected maxval 65535");
    cur.skip_header_terminator();

    DisparityMap map(static_cast<int>(height), static_cast<int>(width), 0.0, true);
    auto payload = cur.payload(map.values.size() * 2);
    for (std::size_t k = 0; k < map.values.size(); ++k) {
        const int hi = static_cast<std::uint8_t>(payload[2 * k]);
        const int lo = static_cast<std::uint8_t>(payload[2 * k + 1]);
        const int raw = (hi << 8) | lo;
        map.values[k] = raw / 256.0;
        map.valid[k] = raw != 0;
    }
    return map;
}

// ---------------------------------------------------------------------------
// Distribution-curve CSV

/// One disparity bin of one pixel's target/predicted curve.
struct CurvePoint {
    int pixel_m = 0;
    int pixel_n = 0;
    int disparity_index = 0;
    double target_phi = 0.0;
    double predicted_prob = 0.0;
};

inline std::string curve_csv_header() {
    return "pixel_m,pixel_n,disparity_index,target_phi,predicted_prob";
}

/// LF line endings, full decimal precision (round-trips exactly).
inline void write_curve_csv(const std::filesystem::path& path,
                            std::span<const CurvePoint> points) {
    std::string out = curve_csv_header() + "\n";
    for (const CurvePoint& pt : points) {
        out += std::to_string(pt.pixel_m) + "," + std::to_string(pt.pixel_n) + "," +
               std::to_string(pt.disparity_index) + "," + detail::full_precision(pt.target_phi) +
               "," + detail::full_precision(pt.predicted_prob) + "\n";
    }
    detail::store_file(path, out);
}

inline std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
    const std::string bytes = detail::load_file(path);
    std::vector<CurvePoint> points;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string::npos) end = bytes.size();
        const std::string line = bytes.substr(pos, end - pos);
        ++line_no;
        if (line_no == 1) {
            if (line != curve_csv_header()) {
                throw io_error(path.string() + ": unexpected CSV header at byte " +
                               std::to_string(pos));
            }
        } else if (!line.empty()) {
            CurvePoint pt;
            const int got = std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf", &pt.pixel_m,
                                        &pt.pixel_n, &pt.disparity_index, &pt.target_phi,
                                        &pt.predicted_prob);
            if (got != 5) {
                throw io_error(path.string() + ": malformed CSV row at byte " +
                               std::to_string(pos));
            }
            points.push_back(pt);
        }
        pos = end + 1;
    }
    return points;
}

// ---------------------------------------------------------------------------
// Cost-volume snapshot

/// Raw little-endian double dump with a one-line header; the format the
/// train command uses for its final-volume snapshot.
inline void write_cost_volume(const std::filesystem::path& path, const CostVolume& volume) {
    std::string out = "UCVL1 " + std::to_string(volume.height()) + " " +
                      std::to_string(volume.width()) + " " + std::to_string(volume.d_max()) +
                      "\n";
    out.reserve(out.size() + volume.values().size() * 8);
    for (double v : volume.values()) detail::append_f64_le(out, v);
    detail::store_file(path, out);
}

inline CostVolume read_cost_volume(const std::filesystem::path& path) {
    const std::string bytes = detail::load_file(path);
    detail::Cursor cur(bytes, path.string());
    if (cur.token() != "UCVL1") cur.fail("expected magic 'UCVL1'");
    const long height = cur.integer("height");
    const long width = cur.integer("width");
    const long d_max = cur.integer("d_max");
    if (height < 1 || width < 1 || d_max < 1) cur.fail("bad dimensions");
    cur.skip_header_terminator();

    CostVolume volume(static_cast<int>(height), static_cast<int>(width),
                      static_cast<int>(d_max));
    auto payload = cur.payload(volume.values().size() * 8);
    for (std::size_t k = 0; k < volume.values().size(); ++k) {
        volume.values()[k] = detail::read_f64_le(payload.subspan(k * 8, 8));
    }
    return volume;
}

}  // namespace ucost

#endif  // UCOST_IO_HPP
