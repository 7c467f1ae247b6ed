// unimodal_cost: synthetic stereo experiments around cost-volume
// regularization. Subcommands: gen, train, eval, inspect-pixel.
//
// Exit codes: 0 success, 1 I/O failure, 2 usage/validation error,
// 3 numerical abort (non-finite parameters during optimization).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ucost/experiment.hpp"
#include "ucost/io.hpp"
#include "ucost/losses.hpp"
#include "ucost/metrics.hpp"
#include "ucost/scene.hpp"
#include "ucost/training.hpp"
#include "ucost/volume.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct GenArgs {
    int width = 64;
    int height = 48;
    int d_max = 16;
    std::uint64_t seed = 7;
    std::string field = "constant";
    double disparity = 0.0;
    double d_left = 0.0;
    double d_right = 0.0;
    double ramp_start = 0.0;
    double ramp_end = 0.0;
    std::string out;
};

int run_gen(const GenArgs& args) {
    ucost::SceneSpec spec;
    spec.width = args.width;
    spec.height = args.height;
    spec.d_max = args.d_max;
    if (args.field == "constant") {
        spec.field = ucost::DisparityFieldKind::Constant;
        spec.disparity = args.disparity;
    } else if (args.field == "two-region") {
        spec.field = ucost::DisparityFieldKind::TwoRegion;
        spec.left_disparity = args.d_left;
        spec.right_disparity = args.d_right;
    } else if (args.field == "ramp") {
        spec.field = ucost::DisparityFieldKind::Ramp;
        spec.ramp_start = args.ramp_start;
        spec.ramp_end = args.ramp_end;
    } else {
        throw std::invalid_argument("--field: expected constant|two-region|ramp");
    }

    const ucost::GeneratedScene scene = ucost::generate_scene(spec, args.seed);
    const std::filesystem::path dir(args.out);
    std::filesystem::create_directories(dir);
    ucost::write_pgm(dir / "left.pgm", scene.pair.left);
    ucost::write_pgm(dir / "right.pgm", scene.pair.right);
    ucost::write_disparity(dir / "gt.pfm", scene.ground_truth);
    std::cout << "wrote " << (dir / "left.pgm").string() << ", " << (dir / "right.pgm").string()
              << ", " << (dir / "gt.pfm").string() << " (+mask)\n";
    return kExitOk;
}

int run_train(const std::string& config_path) {
    const ucost::ExperimentConfig cfg = ucost::ExperimentConfig::load(config_path);
    if (auto warning = cfg.loss.pairing_warning()) {
        std::cerr << "warning: " << *warning << "\n";
    }
    ucost::run_train_experiment(cfg);
    std::cout << "run complete: " << cfg.out_dir.string() << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string fg_mask;
    std::string csv;
};

int run_eval(const EvalArgs& args) {
    const ucost::DisparityMap pred = ucost::read_disparity(args.pred);
    const ucost::DisparityMap gt = ucost::read_disparity(args.gt);
    std::optional<ucost::Mask> fg;
    if (!args.fg_mask.empty()) fg = ucost::read_mask_pgm(args.fg_mask);

    const ucost::MetricsReport report = ucost::d1_metrics(pred, gt, fg ? &*fg : nullptr);
    std::cout << ucost::to_kv_text(report);
    if (!args.csv.empty()) {
        ucost::detail::store_file(args.csv,
                                  ucost::metrics_csv_header() + "\n" + ucost::to_csv_row(report) +
                                      "\n");
    }
    return kExitOk;
}

struct InspectArgs {
    std::string volume;
    int m = 0;
    int n = 0;
    double gt = -1.0;
    std::string label;
    double sigma = 1.0;
    double lambda = 1.0;
    std::vector<double> weights{0.5, 0.2, 0.05};
    std::string out;
};

int run_inspect(const InspectArgs& args) {
    const ucost::CostVolume volume = ucost::read_cost_volume(args.volume);
    if (args.m < 0 || args.m >= volume.height() || args.n < 0 || args.n >= volume.width()) {
        throw std::invalid_argument("pixel (" + std::to_string(args.m) + ", " +
                                    std::to_string(args.n) + ") outside " +
                                    std::to_string(volume.height()) + "x" +
                                    std::to_string(volume.width()));
    }

    std::optional<ucost::LabelDistribution> target;
    if (!args.label.empty()) {
        if (args.gt < 0.0) {
            throw std::invalid_argument("--label needs --gt");
        }
        ucost::LabelKind kind = ucost::LabelKind::one_hot();
        if (args.label == "one-hot") kind = ucost::LabelKind::one_hot();
        else if (args.label == "three-pixel") {
            if (args.weights.size() != 3) throw std::invalid_argument("--weights needs w0,w1,w2");
            kind = ucost::LabelKind::three_pixel(args.weights[0], args.weights[1], args.weights[2]);
        } else if (args.label == "gaussian") kind = ucost::LabelKind::gaussian(args.sigma);
        else if (args.label == "laplacian") kind = ucost::LabelKind::laplacian(args.lambda);
        else throw std::invalid_argument("--label: expected one-hot|three-pixel|gaussian|laplacian");
        target = ucost::make_label(kind, args.gt, volume.d_max());
    }

    auto costs = volume.row(args.m, args.n);
    std::vector<double> probs(costs.begin(), costs.end());
    for (double& v : probs) v = -v;
    ucost::detail::softmax_in_place(probs);

    const ucost::DisparityMap soft = ucost::softargmin(volume);
    const ucost::DisparityMap wta = ucost::wta_argmin(volume);
    const int maxima = ucost::count_local_maxima(probs);
    double peak = 0.0;
    for (double p : probs) peak = std::max(peak, p);

    std::printf("pixel (%d, %d), d_max %d\n", args.m, args.n, volume.d_max());
    std::printf("softargmin = %.17g\n", soft.value_at(args.m, args.n));
    std::printf("wta_index = %d\n", static_cast<int>(wta.value_at(args.m, args.n)));
    std::printf("local_maxima = %d\n", maxima);
    std::printf("peak_mass = %.17g\n", peak);

    if (!args.out.empty()) {
        std::vector<ucost::CurvePoint> points;
        points.reserve(probs.size());
        for (int i = 0; i <= volume.d_max(); ++i) {
            points.push_back({args.m, args.n, i, target ? target->phi[i] : 0.0, probs[i]});
        }
        ucost::write_curve_csv(args.out, points);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic stereo cost-volume experiments"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic stereo scene");
    gen_cmd->add_option("--width", gen.width, "image width");
    gen_cmd->add_option("--height", gen.height, "image height");
    gen_cmd->add_option("--dmax", gen.d_max, "largest disparity candidate");
    gen_cmd->add_option("--seed", gen.seed, "texture seed");
    gen_cmd->add_option("--field", gen.field, "disparity field: constant|two-region|ramp");
    gen_cmd->add_option("--disparity", gen.disparity, "constant-field disparity");
    gen_cmd->add_option("--d-left", gen.d_left, "two-region: left half disparity");
    gen_cmd->add_option("--d-right", gen.d_right, "two-region: right half disparity");
    gen_cmd->add_option("--ramp-start", gen.ramp_start, "ramp: disparity at column 0");
    gen_cmd->add_option("--ramp-end", gen.ramp_end, "ramp: disparity at the last column");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();

    std::string config_path;
    CLI::App* train_cmd = app.add_subcommand("train", "run a training experiment from a config");
    train_cmd->add_option("config", config_path, "experiment config file")->required();

    EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a disparity map against ground truth");
    eval_cmd->add_option("--pred", eval.pred, "predicted disparity (PFM, mask sidecar optional)")
        ->required();
    eval_cmd->add_option("--gt", eval.gt, "ground-truth disparity (PFM, mask sidecar optional)")
        ->required();
    eval_cmd->add_option("--fg-mask", eval.fg_mask, "foreground mask PGM for the bg/fg split");
    eval_cmd->add_option("--csv", eval.csv, "also write the report as one CSV row");

    InspectArgs inspect;
    CLI::App* inspect_cmd =
        app.add_subcommand("inspect-pixel", "dump one pixel's disparity distribution");
    inspect_cmd->add_option("--volume", inspect.volume, "cost-volume snapshot (.ucvl)")->required();
    inspect_cmd->add_option("--m", inspect.m, "pixel row")->required();
    inspect_cmd->add_option("--n", inspect.n, "pixel column")->required();
    inspect_cmd->add_option("--gt", inspect.gt, "ground-truth disparity for the target curve");
    inspect_cmd->add_option("--label", inspect.label,
                            "target kind: one-hot|three-pixel|gaussian|laplacian");
    inspect_cmd->add_option("--sigma", inspect.sigma, "gaussian sigma");
    inspect_cmd->add_option("--lambda", inspect.lambda, "laplacian scale");
    inspect_cmd->add_option("--weights", inspect.weights, "three-pixel weights w0 w1 w2")
        ->expected(3);
    inspect_cmd->add_option("--out", inspect.out, "write the curve CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return run_gen(gen);
        if (train_cmd->parsed()) return run_train(config_path);
        if (eval_cmd->parsed()) return run_eval(eval);
        if (inspect_cmd->parsed()) return run_inspect(inspect);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const ucost::numerical_abort& e) {
        std::cerr << "numerical abort at step " << e.step << ": " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ucost::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
