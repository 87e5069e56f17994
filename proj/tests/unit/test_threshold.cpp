// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "rng.hpp"
#include "threshold.hpp"

using namespace rtme;

namespace {

// Independent recomputation of the histogram-vs-density distance.
double reference_distance(const EstimatorSpec& spec, std::vector<double> losses, std::size_t bins) {
    for (double& l : losses) l = phi(spec, l);
    double mu = 0.0;
    for (double v : losses) mu += v;
    mu /= static_cast<double>(losses.size());
    double var = 0.0;
    for (double v : losses) var += (v - mu) * (v - mu);
    const double sd = std::sqrt(var / static_cast<double>(losses.size()));
    const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
    const double lo = *lo_it, hi = *hi_it, width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> hist(bins, 0.0), dens(bins, 0.0);
    for (double v : losses) hist[std::min<std::size_t>(static_cast<std::size_t>((v - lo) / width), bins - 1)] += 1.0;
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double c = lo + (b + 0.5) * width;
        dens[b] = std::exp(-(c - mu) * (c - mu) / (2.0 * sd * sd));
        total += dens[b];
    }
    double d = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double diff = hist[b] / static_cast<double>(losses.size()) - dens[b] / total;
        d += diff * diff;
    }
    return std::sqrt(d);
}

}  // namespace

TEST_CASE("median of odd and even arrays") {
    const std::vector<double> odd{5, 1, 3}, even{4, 1, 3, 2};
    CHECK(median(odd) == 3.0);
    CHECK(median(even) == 2.5);
    CHECK_THROWS_AS(median(std::vector<double>{}), InputError);
}

TEST_CASE("three-sigma worked example") {
    const double expected = 2.0 + 3.0 * std::sqrt(2.0 / 3.0);
    CHECK(std::abs(three_sigma_threshold({{1, 2, 3, 10, 20}, 0}) - expected) <= 1e-12);
    const LowerHalfStats s = lower_half_stats(std::vector<double>{1, 2, 3, 10, 20});
    CHECK(s.median == 3.0);
    CHECK(s.count == 3);
    CHECK(s.mean == doctest::Approx(2.0));
}

TEST_CASE("three-sigma clamps at the minimum and rejects bad snapshots") {
    CHECK(three_sigma_threshold({{0, 0, 0, 0}, 0}) == kDefaultSigmaMin);
    CHECK(three_sigma_threshold({{0, 0, 0, 0}, 0}, 0.25) == 0.25);
    CHECK_THROWS_AS(three_sigma_threshold({{}, 0}), InputError);
    CHECK_THROWS_AS(three_sigma_threshold({{1.0, -1.0}, 0}), InputError);
    CHECK_THROWS_AS(three_sigma_threshold({{1.0, INFINITY}, 0}), InputError);
}

TEST_CASE("three-sigma is permutation invariant and scale equivariant") {
    Rng rng(42);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(3 + rng.below(40));
        for (double& x : v) x = std::abs(rng.normal(1.0, 2.0));
        const double s0 = three_sigma_threshold({v, 0}, 0.0);
        rng.shuffle(v);
        CHECK(three_sigma_threshold({v, 0}, 0.0) == doctest::Approx(s0).epsilon(1e-12));
        for (double& x : v) x *= 3.5;
        CHECK(three_sigma_threshold({v, 0}, 0.0) == doctest::Approx(3.5 * s0).epsilon(1e-12));
    }
}

TEST_CASE("small-loss selection keeps losses at or below sigma") {
    const std::vector<double> l{0.5, 2.0, 1.0, 1.0001};
    CHECK(select_small_loss(l, 1.0) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("gaussian fit distance agrees with an independent recomputation") {
    Rng rng(8);
    std::vector<double> losses(300);
    for (double& l : losses) l = std::abs(rng.normal(0.6, 0.3));
    for (double eps : {1.0, 2.0, 3.0}) {
        const EstimatorSpec s{EstimatorKind::LogSum, eps};
        CHECK(gaussian_fit_distance(s, losses, 32) == doctest::Approx(reference_distance(s, losses, 32)).epsilon(1e-12));
    }
    CHECK(gaussian_fit_distance({EstimatorKind::LogSum}, std::vector<double>{1.0, 1.0}, 32) < 0.0);
    CHECK(gaussian_fit_distance({EstimatorKind::LogSum}, std::vector<double>{}, 32) < 0.0);
}

TEST_CASE("adaptation picks a grid member or keeps the current value") {
    Rng rng(9);
    std::vector<double> losses(500);
    for (double& l : losses) l = std::abs(rng.normal(0.4, 0.2));
    AdaptConfig cfg;
    cfg.mode = AdaptMode::GaussianFit;
    const EstimatorSpec w{EstimatorKind::WelschPlus, 1.0, 1.7};
    const double picked = adapt_parameter(w, losses, cfg);
    CHECK(std::find(cfg.candidate_grid.begin(), cfg.candidate_grid.end(), picked) != cfg.candidate_grid.end());
    double best = 1e9, best_p = 0.0;
    for (double p : cfg.candidate_grid) {
        const double d = reference_distance(w.with_parameter(p), losses, 32);
        if (d < best) {
            best = d;
            best_p = p;
        }
    }
    CHECK(picked == best_p);
    CHECK(adapt_parameter(w, losses, cfg) == picked);
    CHECK(adapt_parameter(w, std::vector<double>{0.5, 0.5, 0.5}, cfg) == 1.7);
    cfg.mode = AdaptMode::Fixed;
    CHECK(adapt_parameter(w, losses, cfg) == 1.0);
    cfg.mode = AdaptMode::GaussianFit;
    CHECK_THROWS_AS(adapt_parameter({EstimatorKind::Catoni}, losses, cfg), InputError);
}

TEST_CASE("adapt config validation") {
    AdaptConfig cfg;
    cfg.bin_count = 1;
    CHECK_THROWS_AS(cfg.validate({EstimatorKind::LogSum}), ConfigError);
    cfg.bin_count = 32;
    cfg.mode = AdaptMode::GaussianFit;
    cfg.candidate_grid.clear();
    CHECK_THROWS_AS(cfg.validate({EstimatorKind::LogSum}), ConfigError);
    cfg.candidate_grid = {0.5};
    CHECK_THROWS_AS(cfg.validate({EstimatorKind::LogSum}), ConfigError);
}

TEST_CASE("sigma perturbation") {
    CHECK(perturb_sigma(2.0, -0.2) == doctest::Approx(1.6));
    CHECK(perturb_sigma(2.0, 0.0) == 2.0);
    CHECK_THROWS_AS(perturb_sigma(2.0, -1.0), InputError);
}
