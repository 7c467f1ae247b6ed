#ifndef UCOST_EXPERIMENT_HPP
#define UCOST_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucost/io.hpp"
#include "ucost/losses.hpp"
#include "ucost/matching.hpp"
#include "ucost/metrics.hpp"
#include "ucost/scene.hpp"
#include "ucost/training.hpp"

namespace ucost {

/// A full experiment: scene, matcher, loss, optimizer, output directory.
/// Serialized as flat `key = value` text with '#' comments; every run
/// writes its canonical config copy next to its results.
struct ExperimentConfig {
    SceneSpec scene;
    std::uint64_t scene_seed = 7;
    std::string matcher = "free-volume";  // sad | census | free-volume | patch
    int window = 3;
    LossConfig loss;
    int steps = 400;
    double learning_rate = 800.0;
    std::uint64_t opt_seed = 1;
    std::filesystem::path out_dir;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw io_error(path.string() + ": cannot open for reading");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        try {
            return parse(text);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path.string() + ": " + e.what());
        }
    }

    std::string serialize() const;
    void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
        throw std::invalid_argument(key + ": expected a number, got '" + value + "'");
    }
    return v;
}

inline long parse_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') {
        throw std::invalid_argument(key + ": expected an integer, got '" + value + "'");
    }
    return v;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    // collect key = value pairs first so defaults interact cleanly
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": empty key or value");
        }
        if (!kv.emplace(key, value).second) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": duplicate key '" +
                                        key + "'");
        }
    }

    ExperimentConfig cfg;
    std::string noise = "none";
    double sigma = 1.0, lambda = 1.0;
    std::array<double, 3> weights{0.5, 0.2, 0.05};

    for (const auto& [key, value] : kv) {
        if (key == "scene.width") cfg.scene.width = static_cast<int>(detail::parse_int(key, value));
        else if (key == "scene.height") cfg.scene.height = static_cast<int>(detail::parse_int(key, value));
        else if (key == "scene.dmax") cfg.scene.d_max = static_cast<int>(detail::parse_int(key, value));
        else if (key == "scene.seed") cfg.scene_seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
        else if (key == "scene.field") {
            if (value == "constant") cfg.scene.field = DisparityFieldKind::Constant;
            else if (value == "two-region") cfg.scene.field = DisparityFieldKind::TwoRegion;
            else if (value == "ramp") cfg.scene.field = DisparityFieldKind::Ramp;
            else throw std::invalid_argument("scene.field: unknown kind '" + value + "'");
        } else if (key == "scene.disparity") cfg.scene.disparity = detail::parse_real(key, value);
        else if (key == "scene.d_left") cfg.scene.left_disparity = detail::parse_real(key, value);
        else if (key == "scene.d_right") cfg.scene.right_disparity = detail::parse_real(key, value);
        else if (key == "scene.ramp_start") cfg.scene.ramp_start = detail::parse_real(key, value);
        else if (key == "scene.ramp_end") cfg.scene.ramp_end = detail::parse_real(key, value);
        else if (key == "matcher") cfg.matcher = value;
        else if (key == "matcher.window") cfg.window = static_cast<int>(detail::parse_int(key, value));
        else if (key == "loss.regression") {
            if (value == "mse") cfg.loss.regression = RegressionKind::MSE;
            else if (value == "mae") cfg.loss.regression = RegressionKind::MAE;
            else throw std::invalid_argument("loss.regression: expected mse or mae, got '" + value + "'");
        } else if (key == "loss.noise") noise = value;
        else if (key == "loss.sigma") sigma = detail::parse_real(key, value);
        else if (key == "loss.lambda") lambda = detail::parse_real(key, value);
        else if (key == "loss.weights") {
            if (std::sscanf(value.c_str(), "%lf,%lf,%lf", &weights[0], &weights[1], &weights[2]) != 3) {
                throw std::invalid_argument("loss.weights: expected w0,w1,w2");
            }
        } else if (key == "loss.mu") cfg.loss.mu = detail::parse_real(key, value);
        else if (key == "opt.steps") cfg.steps = static_cast<int>(detail::parse_int(key, value));
        else if (key == "opt.lr") cfg.learning_rate = detail::parse_real(key, value);
        else if (key == "opt.seed") cfg.opt_seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
        else if (key == "out") cfg.out_dir = value;
        else throw std::invalid_argument("unknown config key '" + key + "'");
    }

    if (noise == "none") cfg.loss.noise.reset();
    else if (noise == "one-hot") cfg.loss.noise = LabelKind::one_hot();
    else if (noise == "three-pixel") cfg.loss.noise = LabelKind::three_pixel(weights[0], weights[1], weights[2]);
    else if (noise == "gaussian") cfg.loss.noise = LabelKind::gaussian(sigma);
    else if (noise == "laplacian") cfg.loss.noise = LabelKind::laplacian(lambda);
    else throw std::invalid_argument("loss.noise: unknown kind '" + noise + "'");

    cfg.validate();
    return cfg;
}

inline void ExperimentConfig::validate() const {
    scene.validate();
    loss.validate();
    if (matcher != "sad" && matcher != "census" && matcher != "free-volume" && matcher != "patch") {
        throw std::invalid_argument("matcher: expected sad|census|free-volume|patch, got '" +
                                    matcher + "'");
    }
    if (window < 1 || window % 2 == 0) {
        throw std::invalid_argument("matcher.window: must be odd and >= 1");
    }
    if (steps < 1) throw std::invalid_argument("opt.steps: must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("opt.lr: must be positive");
    if (out_dir.empty()) throw std::invalid_argument("out: output directory is required");
}

inline std::string ExperimentConfig::serialize() const {
    std::string out;
    out += "scene.width = " + std::to_string(scene.width) + "\n";
    out += "scene.height = " + std::to_string(scene.height) + "\n";
    out += "scene.dmax = " + std::to_string(scene.d_max) + "\n";
    out += "scene.seed = " + std::to_string(scene_seed) + "\n";
    out += "scene.field = " + std::string(to_string(scene.field)) + "\n";
    switch (scene.field) {
        case DisparityFieldKind::Constant:
            out += "scene.disparity = " + detail::full_precision(scene.disparity) + "\n";
            break;
        case DisparityFieldKind::TwoRegion:
            out += "scene.d_left = " + detail::full_precision(scene.left_disparity) + "\n";
            out += "scene.d_right = " + detail::full_precision(scene.right_disparity) + "\n";
            break;
        case DisparityFieldKind::Ramp:
            out += "scene.ramp_start = " + detail::full_precision(scene.ramp_start) + "\n";
            out += "scene.ramp_end = " + detail::full_precision(scene.ramp_end) + "\n";
            break;
    }
    out += "matcher = " + matcher + "\n";
    out += "matcher.window = " + std::to_string(window) + "\n";
    out += "loss.regression = " + std::string(to_string(loss.regression)) + "\n";
    if (!loss.noise) {
        out += "loss.noise = none\n";
    } else {
        out += "loss.noise = " + std::string(to_string(loss.noise->family())) + "\n";
        switch (loss.noise->family()) {
            case LabelFamily::Gaussian:
                out += "loss.sigma = " + detail::full_precision(loss.noise->sigma()) + "\n";
                break;
            case LabelFamily::Laplacian:
                out += "loss.lambda = " + detail::full_precision(loss.noise->scale()) + "\n";
                break;
            case LabelFamily::ThreePixel: {
                const auto& w = loss.noise->weights();
                out += "loss.weights = " + detail::full_precision(w[0]) + "," +
                       detail::full_precision(w[1]) + "," + detail::full_precision(w[2]) + "\n";
                break;
            }
            case LabelFamily::OneHot: break;
        }
        out += "loss.mu = " + detail::full_precision(loss.mu) + "\n";
    }
    out += "opt.steps = " + std::to_string(steps) + "\n";
    out += "opt.lr = " + detail::full_precision(learning_rate) + "\n";
    out += "opt.seed = " + std::to_string(opt_seed) + "\n";
    out += "out = " + out_dir.string() + "\n";
    return out;
}

/// Runs one training/evaluation experiment and writes loss_trace.csv,
/// metrics.txt, diagnostics.txt, pred.pfm (+mask), volume.ucvl and the
/// config copy into the output directory. The sad/census matchers have no
/// trainable parameters, so their runs evaluate the constructed volume
/// once and record a single-entry trace.
inline void run_train_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const GeneratedScene scene = generate_scene(cfg.scene, cfg.scene_seed);

    CostVolume final_volume;
    std::vector<LossReport> trace;
    if (cfg.matcher == "sad" || cfg.matcher == "census") {
        final_volume = cfg.matcher == "sad"
                           ? sad_cost_volume(scene.pair, cfg.scene.d_max, cfg.window)
                           : census_cost_volume(scene.pair, cfg.scene.d_max, cfg.window);
        trace.push_back(combined_loss(final_volume, scene.ground_truth, cfg.loss));
    } else if (cfg.matcher == "free-volume") {
        const CostVolume init = random_cost_volume(cfg.scene.height, cfg.scene.width,
                                                   cfg.scene.d_max, cfg.opt_seed);
        FreeVolumeResult result = optimize_free_volume(init, scene.ground_truth, cfg.loss,
                                                       cfg.steps, cfg.learning_rate);
        final_volume = std::move(result.volume);
        trace = std::move(result.trace);
    } else {  // patch
        PatchTrainResult result = train_patch_matcher(
            {scene.pair}, {scene.ground_truth}, cfg.scene.d_max, cfg.window, cfg.loss,
            OptimizerConfig{cfg.steps, cfg.learning_rate, cfg.opt_seed});
        final_volume = embedding_cost_volume(result.embedding, scene.pair, cfg.scene.d_max);
        trace = std::move(result.trace);
    }

    std::filesystem::create_directories(cfg.out_dir);
    detail::store_file(cfg.out_dir / "config.txt", cfg.serialize());

    std::string trace_csv = "step,total,regression_part,noise_part,pixel_count\n";
    for (std::size_t s = 0; s < trace.size(); ++s) {
        trace_csv += std::to_string(s) + "," + detail::full_precision(trace[s].total) + "," +
                     detail::full_precision(trace[s].regression_part) + "," +
                     detail::full_precision(trace[s].noise_part) + "," +
                     std::to_string(trace[s].pixel_count) + "\n";
    }
    detail::store_file(cfg.out_dir / "loss_trace.csv", trace_csv);

    const DisparityMap pred = softargmin(final_volume);
    detail::store_file(cfg.out_dir / "metrics.txt",
                       to_kv_text(d1_metrics(pred, scene.ground_truth)));
    detail::store_file(cfg.out_dir / "diagnostics.txt",
                       to_kv_text(shape_diagnostics(final_volume, scene.ground_truth)));
    write_disparity(cfg.out_dir / "pred.pfm", pred);
    write_disparity(cfg.out_dir / "gt.pfm", scene.ground_truth);
    write_cost_volume(cfg.out_dir / "volume.ucvl", final_volume);
}

}  // namespace ucost

#endif  // UCOST_EXPERIMENT_HPP
