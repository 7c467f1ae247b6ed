#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "test_util.hpp"
#include "ucost/losses.hpp"

using namespace ucost;

namespace {

// Scalar reference for the masked regression mean.
double brute_regression(const DisparityMap& pred, const DisparityMap& gt, RegressionKind kind) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < gt.values.size(); ++k) {
        if (gt.valid[k] == 0 || pred.valid[k] == 0) continue;
        const double e = pred.values[k] - gt.values[k];
        sum += kind == RegressionKind::MSE ? e * e : std::abs(e);
        ++count;
    }
    return sum / static_cast<double>(count);
}

// Long-double reference for the per-pixel cross entropy against a
// Laplacian target, sharing nothing with the library path.
long double brute_laplacian_ce(std::span<const double> costs, double d_gt, double lambda) {
    const std::size_t bins = costs.size();
    std::vector<long double> p(bins);
    long double z = 0.0L;
    for (std::size_t i = 0; i < bins; ++i) {
        p[i] = std::exp(-static_cast<long double>(costs[i]));
        z += p[i];
    }
    std::vector<long double> phi(bins);
    long double zl = 0.0L;
    for (std::size_t i = 0; i < bins; ++i) {
        phi[i] = std::exp(-std::abs(static_cast<long double>(i) - d_gt) / lambda);
        zl += phi[i];
    }
    long double ce = 0.0L;
    for (std::size_t i = 0; i < bins; ++i) {
        long double prob = p[i] / z;
        if (prob < 1e-12L) prob = 1e-12L;
        ce -= (phi[i] / zl) * std::log(prob);
    }
    return ce;
}

}  // namespace

TEST_CASE("regression loss is zero for a perfect prediction") {
    std::mt19937_64 rng(31);
    const DisparityMap gt = testutil::random_map(rng, 4, 4, 0.0, 10.0);
    CHECK(regression_loss(gt, gt, RegressionKind::MSE) == 0.0);
    CHECK(regression_loss(gt, gt, RegressionKind::MAE) == 0.0);
}

TEST_CASE("regression loss on a single pixel") {
    DisparityMap gt(2, 2, 0.0, false);
    gt.set(0, 1, 1.0, true);
    DisparityMap pred(2, 2, 0.0, true);
    pred.set(0, 1, 3.0, true);
    CHECK(regression_loss(pred, gt, RegressionKind::MSE) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(regression_loss(pred, gt, RegressionKind::MAE) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("regression loss matches the brute-force masked mean") {
    std::mt19937_64 rng(32);
    for (int rep = 0; rep < 100; ++rep) {
        const DisparityMap gt = testutil::random_map(rng, 5, 5, 0.0, 20.0, 0.6);
        const DisparityMap pred = testutil::random_map(rng, 5, 5, 0.0, 20.0, 0.9);
        bool overlap = false;
        for (std::size_t k = 0; k < gt.valid.size(); ++k) {
            overlap = overlap || (gt.valid[k] && pred.valid[k]);
        }
        if (!overlap) continue;
        for (RegressionKind kind : {RegressionKind::MSE, RegressionKind::MAE}) {
            CHECK(regression_loss(pred, gt, kind) ==
                  doctest::Approx(brute_regression(pred, gt, kind)).epsilon(1e-14));
        }
    }
}

TEST_CASE("regression loss demands supervision") {
    const DisparityMap gt(3, 3, 0.0, false);
    const DisparityMap pred(3, 3, 0.0, true);
    CHECK_THROWS_AS(regression_loss(pred, gt, RegressionKind::MAE), std::domain_error);
    const DisparityMap narrow(3, 2, 0.0, true);
    CHECK_THROWS_AS(regression_loss(narrow, gt, RegressionKind::MAE), std::invalid_argument);
}

TEST_CASE("cross entropy of uniform against uniform is log of the bin count") {
    LabelDistribution uniform{3, {0.25, 0.25, 0.25, 0.25}};
    const std::vector<double> probs{0.25, 0.25, 0.25, 0.25};
    CHECK(cross_entropy(uniform, probs) ==
          doctest::Approx(1.3862943611198906188).epsilon(1e-15));  // ln 4
}

TEST_CASE("cross entropy of a one-hot target is the negative log probability") {
    LabelDistribution hot{3, {0.0, 1.0, 0.0, 0.0}};
    const std::vector<double> probs{0.2, 0.5, 0.2, 0.1};
    CHECK(cross_entropy(hot, probs) ==
          doctest::Approx(0.69314718055994530942).epsilon(1e-15));  // ln 2
}

TEST_CASE("cross entropy matches direct extended-precision summation") {
    std::mt19937_64 rng(33);
    const LabelDistribution target = gaussian_label(3.3, 7, 0.9);
    std::vector<double> scores(8);
    for (double& s : scores) s = testutil::uniform(rng, -4.0, 4.0);
    std::vector<double> probs = testutil::naive_softmax_neg(scores);

    long double expect = 0.0L;
    for (int i = 0; i < 8; ++i) {
        expect -= static_cast<long double>(target.phi[i]) *
                  std::log(static_cast<long double>(probs[i]));
    }
    CHECK(cross_entropy(target, probs) ==
          doctest::Approx(static_cast<double>(expect)).epsilon(1e-14));
}

TEST_CASE("cross entropy rejects mismatched lengths") {
    LabelDistribution target{3, {0.25, 0.25, 0.25, 0.25}};
    const std::vector<double> probs{0.5, 0.5};
    CHECK_THROWS_AS(cross_entropy(target, probs), std::invalid_argument);
}

TEST_CASE("noise-sampling loss hits the entropy floor when probs equal labels") {
    const int d_max = 6;
    DisparityMap gt(2, 2, 3.0, true);
    CostVolume volume(2, 2, d_max);
    double entropy = 0.0;
    const LabelDistribution label = gaussian_label(3.0, d_max, 1.0);
    for (double p : label.phi) entropy -= p * std::log(p);
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 2; ++n) {
            auto row = volume.row(m, n);
            for (int i = 0; i <= d_max; ++i) row[i] = -std::log(label.phi[i]);
        }
    }
    CHECK(noise_sampling_loss(volume, gt, LabelKind::gaussian(1.0)) ==
          doctest::Approx(entropy).epsilon(1e-12));
}

TEST_CASE("a delta at the wrong index costs about the cost gap") {
    const double gap = 30.0;
    CostVolume volume(1, 1, 5, 0.0);
    volume.at(0, 0, 0) = -gap;  // spike far from the target index 4
    DisparityMap gt(1, 1, 4.0, true);
    const double loss = noise_sampling_loss(volume, gt, LabelKind::one_hot());
    CHECK(loss > 0.9 * gap);
    CHECK(loss < gap + 1.0);
}

TEST_CASE("noise-sampling loss matches per-pixel brute force") {
    std::mt19937_64 rng(34);
    const CostVolume volume = testutil::random_volume(rng, 4, 4, 6);
    const DisparityMap gt = testutil::random_gt(rng, 4, 4, 6);
    long double expect = 0.0L;
    std::size_t count = 0;
    for (int m = 0; m < 4; ++m) {
        for (int n = 0; n < 4; ++n) {
            if (!gt.is_valid(m, n)) continue;
            expect += brute_laplacian_ce(volume.row(m, n), gt.value_at(m, n), 1.0);
            ++count;
        }
    }
    expect /= static_cast<long double>(count);
    CHECK(noise_sampling_loss(volume, gt, LabelKind::laplacian(1.0)) ==
          doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
}

TEST_CASE("combined loss without noise is pure regression") {
    std::mt19937_64 rng(35);
    const CostVolume volume = testutil::random_volume(rng, 3, 3, 5);
    const DisparityMap gt = testutil::random_gt(rng, 3, 3, 5);
    LossConfig cfg;
    cfg.regression = RegressionKind::MAE;
    cfg.noise.reset();
    const LossReport report = combined_loss(volume, gt, cfg);
    CHECK(report.noise_part == 0.0);
    CHECK(report.total == report.regression_part);
    CHECK(report.pixel_count == gt.valid_count());
}

TEST_CASE("combined loss decomposes linearly in mu") {
    std::mt19937_64 rng(36);
    const CostVolume volume = testutil::random_volume(rng, 3, 3, 5);
    const DisparityMap gt = testutil::random_gt(rng, 3, 3, 5);
    LossConfig cfg;
    cfg.regression = RegressionKind::MSE;
    cfg.noise = LabelKind::gaussian(1.0);
    cfg.mu = 0.05;
    const LossReport report = combined_loss(volume, gt, cfg);
    CHECK(std::abs(report.total - (report.regression_part + 0.05 * report.noise_part)) < 1e-10);
}

TEST_CASE("combined loss equals the composition of the standalone operations") {
    std::mt19937_64 rng(37);
    for (int rep = 0; rep < 10; ++rep) {
        const CostVolume volume = testutil::random_volume(rng, 3, 4, 7);
        const DisparityMap gt = testutil::random_gt(rng, 3, 4, 7);
        const LossConfig cfg = testutil::loss_config_case(rep);
        const LossReport report = combined_loss(volume, gt, cfg);
        const double reg = regression_loss(softargmin(volume), gt, cfg.regression);
        CHECK(report.regression_part == doctest::Approx(reg).epsilon(1e-14));
        if (cfg.noise) {
            const double noise = noise_sampling_loss(volume, gt, *cfg.noise);
            CHECK(report.noise_part == doctest::Approx(noise).epsilon(1e-14));
            CHECK(report.total == doctest::Approx(reg + cfg.mu * noise).epsilon(1e-12));
        }
    }
}

TEST_CASE("gradient vanishes at a stationary point") {
    // probs equal the (symmetric) labels and dhat equals the ground truth
    const int d_max = 4;
    const LabelDistribution label = gaussian_label(2.0, d_max, 1.0);
    CostVolume volume(2, 2, d_max);
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 2; ++n) {
            auto row = volume.row(m, n);
            for (int i = 0; i <= d_max; ++i) row[i] = -std::log(label.phi[i]);
        }
    }
    DisparityMap gt(2, 2, 2.0, true);
    LossConfig cfg;
    cfg.regression = RegressionKind::MSE;
    cfg.noise = LabelKind::gaussian(1.0);
    const VolumeGradient grad = combined_loss_gradient(volume, gt, cfg);
    for (double g : grad.values()) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("per-pixel gradient rows sum to zero") {
    std::mt19937_64 rng(38);
    for (int rep = 0; rep < 10; ++rep) {
        const CostVolume volume = testutil::random_volume(rng, 3, 3, 6);
        const DisparityMap gt = testutil::random_gt(rng, 3, 3, 6);
        const LossConfig cfg = testutil::loss_config_case(rep);
        const VolumeGradient grad = combined_loss_gradient(volume, gt, cfg);
        for (int m = 0; m < 3; ++m) {
            for (int n = 0; n < 3; ++n) {
                double sum = 0.0;
                for (double g : grad.row(m, n)) sum += g;
                CHECK(std::abs(sum) < 1e-9);
            }
        }
    }
}

TEST_CASE("gradient is zero at unsupervised pixels") {
    std::mt19937_64 rng(39);
    const CostVolume volume = testutil::random_volume(rng, 3, 3, 5);
    DisparityMap gt(3, 3, 2.0, true);
    gt.set(1, 1, 0.0, false);
    LossConfig cfg = testutil::loss_config_case(4);
    const VolumeGradient grad = combined_loss_gradient(volume, gt, cfg);
    for (double g : grad.row(1, 1)) CHECK(g == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(40);
    const CostVolume volume = testutil::random_volume(rng, 2, 2, 6);
    const DisparityMap gt = testutil::random_gt(rng, 2, 2, 6);
    for (int which = 0; which < 5; ++which) {
        const LossConfig cfg = testutil::loss_config_case(which);
        CHECK(finite_difference_check(volume, gt, cfg, 1e-5) < 1e-6);
    }
}

TEST_CASE("the finite-difference audit flags a sign-flipped gradient") {
    std::mt19937_64 rng(41);
    CostVolume volume = testutil::random_volume(rng, 2, 2, 5);
    const DisparityMap gt = testutil::random_gt(rng, 2, 2, 5);
    const LossConfig cfg = testutil::loss_config_case(1);
    const VolumeGradient analytic = combined_loss_gradient(volume, gt, cfg);

    // same comparison rule as finite_difference_check, corrupted analytic side
    const double step = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < volume.values().size(); ++k) {
        const double saved = volume.values()[k];
        volume.values()[k] = saved + step;
        const double up = combined_loss(volume, gt, cfg).total;
        volume.values()[k] = saved - step;
        const double down = combined_loss(volume, gt, cfg).total;
        volume.values()[k] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double corrupted = -analytic.values()[k];
        const double denom = std::max({std::abs(fd), std::abs(corrupted), 1e-8});
        worst = std::max(worst, std::abs(fd - corrupted) / denom);
    }
    CHECK(worst > 0.5);
}

TEST_CASE("a flat volume with near-uniform labels and centered gt checks clean") {
    CostVolume volume(2, 2, 4, 0.0);
    DisparityMap gt(2, 2, 2.0, true);
    LossConfig cfg;
    cfg.regression = RegressionKind::MSE;  // smooth at zero residual
    cfg.noise = LabelKind::gaussian(50.0);
    const VolumeGradient grad = combined_loss_gradient(volume, gt, cfg);
    for (double g : grad.values()) CHECK(std::abs(g) < 1e-4);
    CHECK(finite_difference_check(volume, gt, cfg, 1e-5) < 1e-6);
}

TEST_CASE("gibbs inequality holds with equality only at the target") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 200; ++rep) {
        const int d_max = 3 + static_cast<int>(rng() % 8);
        const LabelDistribution target =
            gaussian_label(testutil::uniform(rng, 0.0, d_max), d_max,
                           testutil::uniform(rng, 0.3, 3.0));
        std::vector<double> scores(d_max + 1);
        for (double& s : scores) s = testutil::uniform(rng, -3.0, 3.0);
        const std::vector<double> probs = testutil::naive_softmax_neg(scores);
        const double floor_ce = cross_entropy(target, target.phi);
        CHECK(cross_entropy(target, probs) >= floor_ce - 1e-12);
    }
}

TEST_CASE("gaussian noise-sampling at tiny sigma equals one-hot cross entropy") {
    std::mt19937_64 rng(43);
    const CostVolume volume = testutil::random_volume(rng, 3, 3, 7);
    DisparityMap gt(3, 3, 0.0, true);
    for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) gt.set(m, n, static_cast<double>(rng() % 8), true);
    }
    const double hot = noise_sampling_loss(volume, gt, LabelKind::one_hot());
    CHECK(std::abs(noise_sampling_loss(volume, gt, LabelKind::gaussian(1e-3)) - hot) < 1e-6);
    CHECK(std::abs(noise_sampling_loss(volume, gt, LabelKind::laplacian(1e-3)) - hot) < 1e-6);
}

TEST_CASE("loss config validation and pairing warnings") {
    LossConfig cfg;
    cfg.noise = LabelKind::gaussian(1.0);
    cfg.mu = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
    cfg.mu = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
    cfg.mu = 0.05;
    CHECK_NOTHROW(cfg.validate());

    cfg.regression = RegressionKind::MSE;
    CHECK(!cfg.pairing_warning());
    cfg.regression = RegressionKind::MAE;
    CHECK(cfg.pairing_warning());
    cfg.noise = LabelKind::laplacian(1.0);
    CHECK(!cfg.pairing_warning());
    cfg.regression = RegressionKind::MSE;
    CHECK(cfg.pairing_warning());
    cfg.noise.reset();
    CHECK(!cfg.pairing_warning());
    cfg.mu = 7.0;  // mu unconstrained without a noise term
    CHECK_NOTHROW(cfg.validate());
}
