#ifndef UCOST_DETAIL_SOFTMAX_HPP
#define UCOST_DETAIL_SOFTMAX_HPP

#include <cmath>
#include <span>

namespace ucost::detail {

// In-place stable softmax over a row of scores. Subtracts the running
// maximum before exponentiating; the summation order is fixed so results
// are bit-reproducible across runs and thread counts.
inline void softmax_in_place(std::span<double> scores) {
    double top = scores[0];
    for (double s : scores) top = s > top ? s : top;
    double norm = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        norm += s;
    }
    for (double& s : scores) s /= norm;
}

}  // namespace ucost::detail

#endif  // UCOST_DETAIL_SOFTMAX_HPP
