// SPDX-License-Identifier: Apache-2.0
#include "threshold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace rtme {

void AdaptConfig::validate(const EstimatorSpec& spec) const {
    if (bin_count < 2) throw ConfigError("adapt.bins must be >= 2");
    if (mode == AdaptMode::Fixed) return;
    if (candidate_grid.empty()) throw ConfigError("adapt.grid must not be empty");
    for (double p : candidate_grid) spec.with_parameter(p).validate();
}

double median(std::span<const double> values) {
    if (values.empty()) throw InputError("median of an empty array");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lower + upper);
}

LowerHalfStats lower_half_stats(std::span<const double> losses) {
    LowerHalfStats s;
    s.median = median(losses);
    // Sorted accumulation keeps the result independent of input order.
    std::vector<double> lower;
    for (double l : losses)
        if (l >= 0.0 && l <= s.median) lower.push_back(l);
    std::sort(lower.begin(), lower.end());
    s.count = lower.size();
    if (lower.empty()) return s;
    double sum = 0.0;
    for (double l : lower) sum += l;
    s.mean = sum / static_cast<double>(lower.size());
    double ss = 0.0;
    for (double l : lower) ss += (l - s.mean) * (l - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(lower.size()));
    return s;
}

double three_sigma_threshold(const LossSnapshot& snapshot, double sigma_min) {
    if (snapshot.losses.empty()) throw InputError("three-sigma threshold of an empty loss snapshot");
    for (double l : snapshot.losses)
        if (!(l >= 0.0) || !std::isfinite(l)) throw InputError("loss snapshot entries must be finite and >= 0");
    const LowerHalfStats s = lower_half_stats(snapshot.losses);
    return std::max(s.mean + 3.0 * s.stddev, sigma_min);
}

std::vector<std::size_t> select_small_loss(std::span<const double> losses, double sigma) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] <= sigma) idx.push_back(i);
    return idx;
}

double gaussian_fit_distance(const EstimatorSpec& spec, std::span<const double> small_losses, std::size_t bins) {
    if (small_losses.empty() || bins < 2) return -1.0;
    std::vector<double> t;
    t.reserve(small_losses.size());
    for (double l : small_losses) t.push_back(phi(spec, l));
    std::sort(t.begin(), t.end());
    const double n = static_cast<double>(t.size());
    double sum = 0.0;
    for (double v : t) sum += v;
    const double mu = sum / n;
    double ss = 0.0;
    for (double v : t) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / n);
    const double lo = t.front(), hi = t.back();
    if (!(sd > 0.0) || !(hi > lo)) return -1.0;

    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> hist(bins, 0.0);
    for (double v : t) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        hist[std::min(b, bins - 1)] += 1.0;
    }
    for (double& h : hist) h /= n;

    std::vector<double> dens(bins);
    double dsum = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double c = lo + (static_cast<double>(b) + 0.5) * width;
        const double z = (c - mu) / sd;
        dens[b] = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
        dsum += dens[b];
    }
    double d2 = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double diff = hist[b] - dens[b] / dsum;
        d2 += diff * diff;
    }
    return std::sqrt(d2);
}

double adapt_parameter(const EstimatorSpec& spec, std::span<const double> small_losses, const AdaptConfig& config) {
    if (config.mode == AdaptMode::Fixed) return 1.0;
    if (!spec.has_parameter())
        throw InputError("parameter adaptation applies only to logsum and welsch+");
    if (small_losses.empty()) throw InputError("parameter adaptation needs a nonempty small-loss set");

    std::vector<double> grid = config.candidate_grid;
    std::sort(grid.begin(), grid.end());
    double best = spec.parameter();
    double best_d = -1.0;
    for (double p : grid) {
        const double d = gaussian_fit_distance(spec.with_parameter(p), small_losses, config.bin_count);
        if (d < 0.0) continue;
        if (best_d < 0.0 || d < best_d) {
            best_d = d;
            best = p;
        }
    }
    return best;
}

double perturb_sigma(double sigma, double delta_fraction) {
    if (!(delta_fraction > -1.0)) throw InputError("sigma perturbation must be > -1");
    return sigma * (1.0 + delta_fraction);
}

}  // namespace rtme
