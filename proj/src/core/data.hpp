// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "noise.hpp"

namespace rtme {

/// Noisy train / noisy validation / clean test.
struct SplitDataset {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

struct MixtureParams {
    int k = 4;
    std::size_t n = 2000;
    std::size_t dim = 2;
    double separation = 4.0;  // distance between adjacent cluster means
    double spread = 0.8;      // per-coordinate standard deviation of each cluster
};

/// k isotropic Gaussian clusters with means evenly spaced on a circle in the
/// first two coordinates (on a line when dim == 1), adjacent means exactly
/// `separation` apart. Class counts differ by at most one.
LabeledDataset make_gaussian_mixture(const MixtureParams& params, std::uint64_t seed);

/// Big-endian IDX pair (0x00000803 images, 0x00000801 labels); pixels scaled to [0, 1].
/// `limit` > 0 keeps only the first `limit` examples.
LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::size_t limit = 0);

/// Per-feature statistics of one sample.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static FeatureScaler fit(const Matrix& features);
    /// (x - mean) / stddev; constant features map to 0.
    void apply(Matrix& features) const;
};

/// Fits on the train split and applies the same transform to val and test.
void standardize(SplitDataset& split);

/// Random disjoint train/val partition of an already-noisy pool; val gets
/// round(n * val_fraction) examples. Test is left empty.
SplitDataset split_train_val(const LabeledDataset& noisy_pool, double val_fraction, std::uint64_t seed);

/// Header: x0..x{d-1},clean_label,noisy_label.
std::string dataset_to_csv(const LabeledDataset& data);

}  // namespace rtme
