// SPDX-License-Identifier: Apache-2.0
//
// Truncation point and intrinsic-parameter selection from a per-epoch loss
// snapshot.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "estimators.hpp"

namespace rtme {

inline constexpr double kDefaultSigmaMin = 1e-3;

struct LossSnapshot {
    std::vector<double> losses;
    long epoch = 0;
};

enum class AdaptMode { Fixed, GaussianFit };

struct AdaptConfig {
    AdaptMode mode = AdaptMode::Fixed;
    std::vector<double> candidate_grid{1.0, 1.5, 2.0, 2.5, 3.0};
    std::size_t bin_count = 32;

    void validate(const EstimatorSpec& spec) const;
};

/// Median with the two-middle average for even lengths.
double median(std::span<const double> values);

/// Moments of the losses at or below the median.
struct LowerHalfStats {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0;  // population (divide by n)
    std::size_t count = 0;
};

LowerHalfStats lower_half_stats(std::span<const double> losses);

/// sigma = mu + 3 delta over the at-or-below-median losses, clamped below at
/// `sigma_min`.
double three_sigma_threshold(const LossSnapshot& snapshot, double sigma_min = kDefaultSigmaMin);

/// Indices i with losses[i] <= sigma, in input order.
std::vector<std::size_t> select_small_loss(std::span<const double> losses, double sigma);

/// l2 distance between the normalized histogram of phi_p(small_losses) and the
/// fitted Gaussian evaluated at bin centres; returns < 0 when degenerate.
double gaussian_fit_distance(const EstimatorSpec& spec, std::span<const double> small_losses, std::size_t bins);

/// New epsilon / alpha. Fixed mode returns 1. Gaussian mode returns the grid
/// argmin of gaussian_fit_distance (ties to the smaller value), or the estimator's
/// current parameter when every candidate is degenerate.
double adapt_parameter(const EstimatorSpec& spec, std::span<const double> small_losses, const AdaptConfig& config);

/// sigma * (1 + delta_fraction).
double perturb_sigma(double sigma, double delta_fraction);

}  // namespace rtme
