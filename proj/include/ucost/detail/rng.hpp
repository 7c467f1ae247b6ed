#ifndef UCOST_DETAIL_RNG_HPP
#define UCOST_DETAIL_RNG_HPP

#include <cstdint>
#include <random>

namespace ucost::detail {

// Uniform double in [0, 1) from the top 53 bits of the generator output.
// Distribution classes are implementation-defined, so this keeps generated
// data bit-identical across standard libraries.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ucost::detail

#endif  // UCOST_DETAIL_RNG_HPP
