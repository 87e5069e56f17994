// SPDX-License-Identifier: Apache-2.0
//
// Synthetic label noise over a clean labeled sample.
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "netcore.hpp"
#include "rng.hpp"

namespace rtme {

/// Observed sample with its latent clean labels.
struct LabeledDataset {
    Matrix features;  // n x d
    std::vector<int> clean_labels;
    std::vector<int> noisy_labels;
    int k = 0;
    std::vector<bool> clean_mask;  // noisy_labels[i] == clean_labels[i]

    std::size_t size() const { return clean_labels.size(); }
    std::size_t dim() const { return features.cols(); }

    /// Clean sample: noisy labels equal clean labels.
    static LabeledDataset clean(Matrix features, std::vector<int> labels, int k);
    LabeledDataset subset(std::span<const std::size_t> indices) const;
    void refresh_mask();
    /// Throws InputError on a broken invariant.
    void validate() const;
};

enum class NoiseKind { None, Symmetric, Pairflip, Instance };

std::string_view to_string(NoiseKind kind);
std::optional<NoiseKind> parse_noise_kind(std::string_view name);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    double tau = 0.0;
    std::uint64_t seed = 0;
};

/// Keep with prob 1 - tau, otherwise move uniformly to one of the other k - 1 classes.
LabeledDataset inject_symmetric(const LabeledDataset& data, double tau, Rng& rng);

/// y -> (y + 1) mod k with prob tau; tau < 0.5.
LabeledDataset inject_pairflip(const LabeledDataset& data, double tau, Rng& rng);

/// Feature-dependent flips: per-example rate q_i ~ N(tau, 0.1^2) truncated to
/// [0, 1]; a d x k standard-normal projection scores each example, the true
/// class is masked out, and the softmax of the remaining scores scaled by q_i
/// gives the flip targets. tau == 0 means no flips.
LabeledDataset inject_instance(const LabeledDataset& data, double tau, Rng& rng);

LabeledDataset inject_noise(const LabeledDataset& data, const NoiseSpec& spec);

struct NoiseStats {
    std::vector<std::vector<double>> transition;  // row = clean class, col = observed class
    std::vector<std::vector<std::size_t>> counts;
    double flip_rate = 0.0;
    std::vector<double> per_class_flip_rate;
};

NoiseStats noise_stats(const LabeledDataset& data);

}  // namespace rtme
