// SPDX-License-Identifier: Apache-2.0
//
// Training loops: regularly truncated M-estimators, the plain cross-entropy
// baseline and the per-batch small-loss selection baseline. All three share one
// loop so that their trajectories are comparable step for step.
#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "estimators.hpp"
#include "netcore.hpp"
#include "threshold.hpp"

namespace rtme {

struct LrSchedule {
    double initial = 1e-2;
    std::vector<long> decay_epochs{40, 80};
    double factor = 10.0;

    /// lr divided by `factor` once for every decay epoch <= epoch.
    double at(long epoch) const;
};

struct TrainConfig {
    long epochs = 100;
    std::size_t batch_size = 128;
    LrSchedule lr;
    double momentum = 0.9;
    double weight_decay = 1e-3;
    EstimatorSpec estimator{EstimatorKind::Catoni};
    long period = 2;  // R
    AdaptConfig adapt;
    double sigma_perturb = 0.0;
    double sigma_min = kDefaultSigmaMin;
    std::vector<std::size_t> hidden{32, 32};
    Activation activation = Activation::ReLU;
    bool zero_output_init = true;
    std::uint64_t seed = 0;
    /// Permits period == 1 (never truncate) as an explicit ablation.
    bool original_only_ablation = false;

    void validate() const;
};

struct EpochRecord {
    long epoch = 0;
    EpochMode mode = EpochMode::Original;
    double sigma = 0.0;
    double parameter = 1.0;  // epsilon or alpha in force for the epoch
    double lr = 0.0;
    double selected_fraction = 1.0;  // snapshot share with loss <= sigma (or kept share for small-loss)
    double train_acc = 0.0;          // against the observed (noisy) labels
    double clean_fit = 0.0;
    double noisy_fit = 0.0;
    bool noisy_partition_empty = false;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct RunRecord {
    std::vector<EpochRecord> rows;
    long best_epoch = -1;
    double best_val_acc = 0.0;
    double test_acc_at_best = 0.0;
};

struct TrainResult {
    MlpModel model;  // parameters at the best noisy-validation epoch
    RunRecord record;
};

/// Called with (0, initial model) and then (T + 1, model after epoch T).
/// Returning false stops training early.
using EpochObserver = std::function<bool(long completed_epochs, const MlpModel& model)>;

TrainResult train_rtme(const TrainConfig& config, const SplitDataset& split, const EpochObserver& observer = {});

/// All weights 1 every epoch.
TrainResult train_ce_baseline(const TrainConfig& config, const SplitDataset& split,
                              const EpochObserver& observer = {});

/// Truncated mode in every epoch after the first (period = epochs).
TrainResult train_truncated_only(const TrainConfig& config, const SplitDataset& split,
                                 const EpochObserver& observer = {});

/// keep fraction 1 - min(T / T_k * tau, tau).
double smallloss_keep_fraction(long epoch, double tau, long t_k);

/// Indices of the ceil(keep_fraction * n) smallest losses (at least one),
/// ties by position, returned in ascending index order.
std::vector<std::size_t> select_smallest(std::span<const double> losses, double keep_fraction);

TrainResult train_smallloss_baseline(const TrainConfig& config, double tau, long t_k, const SplitDataset& split,
                                     const EpochObserver& observer = {});

/// Accuracy against the dataset's observed labels.
double evaluate(const MlpModel& model, const LabeledDataset& data);

struct MemorizationMetrics {
    double clean_fit = 0.0;  // clean-labeled examples predicted as their label
    double noisy_fit = 0.0;  // mislabeled examples predicted as their given noisy label
    bool clean_empty = false;
    bool noisy_empty = false;
};

MemorizationMetrics memorization_metrics(const MlpModel& model, const LabeledDataset& train);

/// Per-example CE of the observed labels.
std::vector<double> per_example_losses(const MlpModel& model, const LabeledDataset& data);

}  // namespace rtme
