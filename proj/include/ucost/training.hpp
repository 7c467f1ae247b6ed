#ifndef UCOST_TRAINING_HPP
#define UCOST_TRAINING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ucost/detail/rng.hpp"
#include "ucost/image.hpp"
#include "ucost/losses.hpp"
#include "ucost/matching.hpp"
#include "ucost/volume.hpp"

namespace ucost {

/// Raised when optimization produces a non-finite parameter; carries the
/// step at which it happened.
struct numerical_abort : std::runtime_error {
    int step;
    numerical_abort(int step_index, const std::string& what)
        : std::runtime_error(what), step(step_index) {}
};

struct OptimizerConfig {
    int steps = 100;
    double learning_rate = 1.0;
    std::uint64_t seed = 1;
};

/// Bookkeeping shared by the optimizers: step counter, the two-phase
/// learning-rate schedule (full rate for the first 40% of steps, half rate
/// after), and the run seed.
struct TrainState {
    int step_count = 0;
    int total_steps = 0;
    double base_learning_rate = 0.0;
    std::uint64_t seed = 0;

    double current_learning_rate() const {
        const int full_rate_steps = std::max(1, (total_steps * 2) / 5);
        return step_count < full_rate_steps ? base_learning_rate : 0.5 * base_learning_rate;
    }

    // Call after each parameter update. NaN/inf parameters abort the run
    // with the offending step in the exception.
    void advance_checked(std::span<const double> parameters) {
        for (double v : parameters) {
            if (!std::isfinite(v)) {
                throw numerical_abort(step_count, "non-finite parameter after step " +
                                                      std::to_string(step_count));
            }
        }
        ++step_count;
    }
};

/// Cost volume filled with seeded uniform [0, 1) noise; the free-volume
/// experiments start from this.
inline CostVolume random_cost_volume(int height, int width, int d_max, std::uint64_t seed) {
    CostVolume volume(height, width, d_max);
    std::mt19937_64 rng(seed);
    for (double& v : volume.values()) v = detail::uniform_unit(rng);
    return volume;
}

struct FreeVolumeResult {
    CostVolume volume;
    std::vector<LossReport> trace;  // loss evaluated at the start of each step
};

/// Plain gradient descent directly on the cost entries. The loss trace has
/// one entry per step, evaluated before that step's update.
inline FreeVolumeResult optimize_free_volume(const CostVolume& init, const DisparityMap& gt,
                                             const LossConfig& config, int steps,
                                             double learning_rate) {
    if (steps < 1) throw std::invalid_argument("optimize_free_volume: steps must be >= 1");
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("optimize_free_volume: learning rate must be positive");
    }
    FreeVolumeResult result{init, {}};
    result.trace.reserve(steps);
    TrainState state{0, steps, learning_rate, 0};
    for (int step = 0; step < steps; ++step) {
        auto [report, grad] = combined_loss_with_gradient(result.volume, gt, config);
        result.trace.push_back(report);
        const double lr = state.current_learning_rate();
        auto& values = result.volume.values();
        const auto& g = grad.values();
        for (std::size_t k = 0; k < values.size(); ++k) values[k] -= lr * g[k];
        state.advance_checked(values);
    }
    return result;
}

/// Linear patch embedding: each window x window patch, flattened row-major,
/// is mapped through a square weight matrix; matching cost is the negative
/// inner product of the embedded left/right patches. The identity weight
/// reproduces raw patch correlation and is the untrained baseline.
struct PatchEmbedding {
    int window = 3;
    int dim = 9;                 // rows of the weight matrix (window^2)
    std::vector<double> weight;  // dim x window^2, row-major

    static PatchEmbedding identity(int window) {
        if (window < 1 || window % 2 == 0) {
            throw std::invalid_argument("PatchEmbedding: window must be odd and >= 1");
        }
        const int k = window * window;
        PatchEmbedding e{window, k, std::vector<double>(static_cast<std::size_t>(k) * k, 0.0)};
        for (int i = 0; i < k; ++i) e.weight[static_cast<std::size_t>(i) * k + i] = 1.0;
        return e;
    }
};

namespace detail {

// Flattened clamped patches for every pixel: pixel-major, window^2 taps each.
inline std::vector<double> extract_patches(const Image& img, int window) {
    const int half = window / 2;
    const int taps = window * window;
    std::vector<double> patches(static_cast<std::size_t>(img.height) * img.width * taps);
    std::size_t k = 0;
    for (int m = 0; m < img.height; ++m) {
        for (int n = 0; n < img.width; ++n) {
            for (int dm = -half; dm <= half; ++dm) {
                for (int dn = -half; dn <= half; ++dn) {
                    patches[k++] = img.at_clamped(m + dm, n + dn);
                }
            }
        }
    }
    return patches;
}

// emb[pixel * dim + r] = sum_k weight[r, k] * patches[pixel * taps + k]
inline std::vector<double> embed_patches(const PatchEmbedding& emb,
                                         const std::vector<double>& patches,
                                         std::size_t pixel_count) {
    const int taps = emb.window * emb.window;
    std::vector<double> out(pixel_count * emb.dim, 0.0);
    for (std::size_t p = 0; p < pixel_count; ++p) {
        const double* patch = patches.data() + p * taps;
        double* e = out.data() + p * emb.dim;
        for (int r = 0; r < emb.dim; ++r) {
            const double* w = emb.weight.data() + static_cast<std::size_t>(r) * taps;
            double acc = 0.0;
            for (int k = 0; k < taps; ++k) acc += w[k] * patch[k];
            e[r] = acc;
        }
    }
    return out;
}

}  // namespace detail

/// Cost volume induced by a patch embedding on a stereo pair:
/// c_i(m,n) = -<emb(left patch at (m,n)), emb(right patch at (m,n-i))>.
inline CostVolume embedding_cost_volume(const PatchEmbedding& emb, const StereoPair& pair,
                                        int d_max) {
    detail::require_matcher_args(pair, d_max, emb.window);
    const int height = pair.left.height, width = pair.left.width;
    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    const std::vector<double> left_patches = detail::extract_patches(pair.left, emb.window);
    const std::vector<double> right_patches = detail::extract_patches(pair.right, emb.window);
    const std::vector<double> left_emb = detail::embed_patches(emb, left_patches, pixels);
    const std::vector<double> right_emb = detail::embed_patches(emb, right_patches, pixels);

    CostVolume volume(height, width, d_max);
    for (int m = 0; m < height; ++m) {
        for (int n = 0; n < width; ++n) {
            auto costs = volume.row(m, n);
            const double* el = left_emb.data() + (static_cast<std::size_t>(m) * width + n) * emb.dim;
            for (int i = 0; i <= d_max; ++i) {
                const int rn = n - i;
                if (rn < 0) {
                    costs[i] = kOutOfBoundsCost;
                    continue;
                }
                const double* er =
                    right_emb.data() + (static_cast<std::size_t>(m) * width + rn) * emb.dim;
                double dot = 0.0;
                for (int r = 0; r < emb.dim; ++r) dot += el[r] * er[r];
                costs[i] = -dot;
            }
        }
    }
    return volume;
}

struct PatchTrainResult {
    PatchEmbedding embedding;
    std::vector<LossReport> trace;
};

/// Trains the patch embedding by gradient descent through the combined
/// loss. Each step draws one training pair (seeded, so runs are exactly
/// reproducible) and does a full-batch update on it.
///
/// Backward pass through the cost construction: with a and b the flattened
/// patches and W the weight, c = -(W a) . (W b), so
///   dc/dW = -(W a) b^T - (W b) a^T
/// and the per-entry loss gradients g = dL/dc_i chain straight through.
inline PatchTrainResult train_patch_matcher(const std::vector<StereoPair>& pairs,
                                            const std::vector<DisparityMap>& gts, int d_max,
                                            int window, const LossConfig& config,
                                            const OptimizerConfig& opt) {
    if (pairs.empty() || pairs.size() != gts.size()) {
        throw std::invalid_argument("train_patch_matcher: need matching pair/gt lists, >= 1 pair");
    }
    if (opt.steps < 0) throw std::invalid_argument("train_patch_matcher: steps must be >= 0");
    if (!(opt.learning_rate > 0.0)) {
        throw std::invalid_argument("train_patch_matcher: learning rate must be positive");
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        detail::require_matcher_args(pairs[k], d_max, window);
        if (gts[k].height != pairs[k].left.height || gts[k].width != pairs[k].left.width) {
            throw std::invalid_argument("train_patch_matcher: pair/gt shape mismatch");
        }
    }

    PatchTrainResult result{PatchEmbedding::identity(window), {}};
    result.trace.reserve(opt.steps);
    const int taps = window * window;
    const int dim = result.embedding.dim;

    // Patches never change; cache them per pair.
    std::vector<std::vector<double>> left_patches(pairs.size()), right_patches(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        left_patches[k] = detail::extract_patches(pairs[k].left, window);
        right_patches[k] = detail::extract_patches(pairs[k].right, window);
    }

    std::mt19937_64 rng(opt.seed);
    TrainState state{0, opt.steps, opt.learning_rate, opt.seed};
    std::vector<double> weight_grad(result.embedding.weight.size());

    for (int step = 0; step < opt.steps; ++step) {
        const std::size_t pick = pairs.size() == 1 ? 0 : rng() % pairs.size();
        const StereoPair& pair = pairs[pick];
        const DisparityMap& gt = gts[pick];
        const int width = pair.left.width;
        const std::size_t pixels = static_cast<std::size_t>(pair.left.height) * width;

        const std::vector<double> left_emb =
            detail::embed_patches(result.embedding, left_patches[pick], pixels);
        const std::vector<double> right_emb =
            detail::embed_patches(result.embedding, right_patches[pick], pixels);

        CostVolume volume = embedding_cost_volume(result.embedding, pair, d_max);
        auto [report, grad] = combined_loss_with_gradient(volume, gt, config);
        result.trace.push_back(report);

        std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
        for (std::size_t p = 0; p < pixels; ++p) {
            const int n = static_cast<int>(p % width);
            auto g = std::span<const double>(grad.values().data() + p * volume.bins(),
                                             volume.bins());
            const double* a = left_patches[pick].data() + p * taps;
            const double* ea = left_emb.data() + p * dim;
            for (int i = 0; i <= d_max; ++i) {
                if (g[i] == 0.0 || n - i < 0) continue;
                const std::size_t q = p - static_cast<std::size_t>(i);
                const double* b = right_patches[pick].data() + q * taps;
                const double* eb = right_emb.data() + q * dim;
                for (int r = 0; r < dim; ++r) {
                    double* wg = weight_grad.data() + static_cast<std::size_t>(r) * taps;
                    const double ga = -g[i] * ea[r];
                    const double gb = -g[i] * eb[r];
                    for (int k = 0; k < taps; ++k) {
                        wg[k] += ga * b[k] + gb * a[k];
                    }
                }
            }
        }

        const double lr = state.current_learning_rate();
        for (std::size_t k = 0; k < weight_grad.size(); ++k) {
            result.embedding.weight[k] -= lr * weight_grad[k];
        }
        state.advance_checked(result.embedding.weight);
    }
    return result;
}

}  // namespace ucost

#endif  // UCOST_TRAINING_HPP
