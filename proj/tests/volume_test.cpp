#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "ucost/volume.hpp"

using namespace ucost;

TEST_CASE("softmax of equal costs is uniform") {
    CostVolume volume(1, 1, 2, 0.0);
    const ProbabilityVolume probs = softmax_neg_cost(volume);
    for (int i = 0; i <= 2; ++i) {
        CHECK(probs.at(0, 0, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
}

TEST_CASE("softmax approaches a delta as the cost gap grows") {
    CostVolume volume(1, 1, 2, 1e6);
    volume.at(0, 0, 0) = 0.0;
    const ProbabilityVolume probs = softmax_neg_cost(volume);
    CHECK(probs.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.at(0, 0, 1) < 1e-300);
    CHECK(probs.at(0, 0, 2) < 1e-300);
}

TEST_CASE("softmax matches extended-precision direct evaluation") {
    CostVolume volume(1, 1, 2);
    volume.at(0, 0, 0) = 1.0;
    volume.at(0, 0, 1) = 2.0;
    volume.at(0, 0, 2) = 3.0;
    const ProbabilityVolume probs = softmax_neg_cost(volume);
    // frozen from an 60-digit evaluation of exp/normalize
    CHECK(probs.at(0, 0, 0) == doctest::Approx(0.66524095577482188953).epsilon(1e-15));
    CHECK(probs.at(0, 0, 1) == doctest::Approx(0.24472847105479765247).epsilon(1e-15));
    CHECK(probs.at(0, 0, 2) == doctest::Approx(0.090030573170380457998).epsilon(1e-15));

    const auto oracle = testutil::naive_softmax_neg(volume.row(0, 0));
    for (int i = 0; i <= 2; ++i) {
        CHECK(probs.at(0, 0, i) == doctest::Approx(oracle[i]).epsilon(1e-14));
    }
}

TEST_CASE("non-finite cost is rejected with the pixel named") {
    CostVolume volume(3, 4, 2, 0.0);
    volume.at(1, 2, 1) = std::nan("");
    CHECK_THROWS_WITH_AS(softmax_neg_cost(volume),
                         "softmax_neg_cost: non-finite cost at pixel (1, 2)", std::domain_error);
    CHECK_THROWS_AS(softargmin(volume), std::domain_error);
    CHECK_THROWS_AS(wta_argmin(volume), std::domain_error);
}

TEST_CASE("softargmin of a uniform volume is the bin midpoint") {
    CostVolume volume(2, 3, 4, 7.25);
    const DisparityMap d = softargmin(volume);
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 3; ++n) {
            CHECK(d.value_at(m, n) == doctest::Approx(2.0).epsilon(1e-14));
            CHECK(d.is_valid(m, n));
        }
    }
}

TEST_CASE("softargmin collapses to the spike index on delta volumes") {
    for (int k = 0; k <= 5; ++k) {
        CostVolume volume(1, 1, 5, 0.0);
        volume.at(0, 0, k) = -1e6;
        const DisparityMap d = softargmin(volume);
        CHECK(std::abs(d.value_at(0, 0) - k) < 1e-9);
    }
}

TEST_CASE("softargmin equals the brute-force expectation") {
    std::mt19937_64 rng(11);
    const CostVolume volume = testutil::random_volume(rng, 3, 3, 7);
    const DisparityMap d = softargmin(volume);
    for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) {
            const auto p = testutil::naive_softmax_neg(volume.row(m, n));
            double expect = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) expect += i * p[i];
            CHECK(d.value_at(m, n) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("wta picks the minimum and breaks ties toward the smallest index") {
    CostVolume volume(1, 2, 2);
    volume.at(0, 0, 0) = 3.0;
    volume.at(0, 0, 1) = 1.0;
    volume.at(0, 0, 2) = 2.0;
    volume.at(0, 1, 0) = 5.0;
    volume.at(0, 1, 1) = 5.0;
    volume.at(0, 1, 2) = 5.0;
    const DisparityMap d = wta_argmin(volume);
    CHECK(d.value_at(0, 0) == 1.0);
    CHECK(d.value_at(0, 1) == 0.0);
}

TEST_CASE("wta equals a brute-force scan on random volumes") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const CostVolume volume = testutil::random_volume(rng, 4, 4, 6);
        const DisparityMap d = wta_argmin(volume);
        for (int m = 0; m < 4; ++m) {
            for (int n = 0; n < 4; ++n) {
                auto costs = volume.row(m, n);
                int best = 0;
                for (int i = 1; i < static_cast<int>(costs.size()); ++i) {
                    if (costs[i] < costs[best]) best = i;
                }
                CHECK(d.value_at(m, n) == static_cast<double>(best));
            }
        }
    }
}

TEST_CASE("per-pixel constant shifts leave softmax and softargmin unchanged") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        CostVolume volume = testutil::random_volume(rng, 2, 2, 8);
        const ProbabilityVolume before = softmax_neg_cost(volume);
        const DisparityMap d_before = softargmin(volume);
        for (int m = 0; m < 2; ++m) {
            for (int n = 0; n < 2; ++n) {
                const double shift = testutil::uniform(rng, -100.0, 100.0);
                for (double& c : volume.row(m, n)) c += shift;
            }
        }
        const ProbabilityVolume after = softmax_neg_cost(volume);
        const DisparityMap d_after = softargmin(volume);
        for (int m = 0; m < 2; ++m) {
            for (int n = 0; n < 2; ++n) {
                for (int i = 0; i <= 8; ++i) {
                    CHECK(std::abs(before.at(m, n, i) - after.at(m, n, i)) < 1e-10);
                }
                CHECK(std::abs(d_before.value_at(m, n) - d_after.value_at(m, n)) < 1e-10);
            }
        }
    }
}

TEST_CASE("softargmin output always lies in [0, d_max]") {
    std::mt19937_64 rng(14);
    for (int rep = 0; rep < 50; ++rep) {
        const int d_max = 1 + static_cast<int>(rng() % 12);
        const CostVolume volume = testutil::random_volume(rng, 3, 3, d_max, -50.0, 50.0);
        const DisparityMap d = softargmin(volume);
        for (double v : d.values) {
            CHECK(v >= 0.0);
            CHECK(v <= static_cast<double>(d_max));
        }
    }
}

TEST_CASE("softargmin agrees with wta when one cost dominates") {
    std::mt19937_64 rng(15);
    for (int rep = 0; rep < 50; ++rep) {
        const int d_max = 2 + static_cast<int>(rng() % 10);
        CostVolume volume = testutil::random_volume(rng, 1, 1, d_max, 0.0, 5.0);
        const int k = static_cast<int>(rng() % (d_max + 1));
        volume.at(0, 0, k) = -50.0;  // at least 50 below every other entry
        const DisparityMap soft = softargmin(volume);
        const DisparityMap hard = wta_argmin(volume);
        CHECK(std::abs(soft.value_at(0, 0) - hard.value_at(0, 0)) < 1e-9);
    }
}

TEST_CASE("probability rows sum to one") {
    std::mt19937_64 rng(16);
    for (int rep = 0; rep < 30; ++rep) {
        const CostVolume volume = testutil::random_volume(rng, 3, 4, 9, -30.0, 30.0);
        const ProbabilityVolume probs = softmax_neg_cost(volume);
        for (int m = 0; m < 3; ++m) {
            for (int n = 0; n < 4; ++n) {
                double sum = 0.0;
                for (double p : probs.row(m, n)) {
                    CHECK(p > 0.0);
                    sum += p;
                }
                CHECK(std::abs(sum - 1.0) < 1e-12);
            }
        }
    }
}
