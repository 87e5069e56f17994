// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration behind the CLI subcommands. Every command writes
// its artifacts into the configured output directory with the config hash in
// the file name, and returns a JSON summary.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace rtme {

struct CommandResult {
    int exit_code = 0;  // 1 only for a failed lemma check
    std::string summary_json;
    std::vector<std::filesystem::path> artifacts;
};

/// Pool -> noise -> train/val split -> clean test set -> standardization.
/// Data, noise, split and test streams all derive from `seed`; an explicit
/// noise.seed pins the noise stream.
SplitDataset build_split(const RunConfig& cfg, std::uint64_t seed);

/// Noisy pool for noise statistics (no split, no standardization).
LabeledDataset build_noisy_pool(const RunConfig& cfg, std::uint64_t seed);

/// Trains with cfg.method; cfg.train.seed is replaced by `seed`.
TrainResult run_method(const RunConfig& cfg, const SplitDataset& split, std::uint64_t seed,
                       const EpochObserver& observer = {});

/// Runs jobs 0..n-1 on `workers` threads; the lowest-index failure is rethrown.
void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job);

CommandResult cmd_train(const RunConfig& cfg);
CommandResult cmd_sweep_r(const RunConfig& cfg);
CommandResult cmd_perturb_sigma(const RunConfig& cfg);
/// `epoch` counts completed epochs (0 = initial model); nullopt uses hist.epoch.
CommandResult cmd_hist(const RunConfig& cfg, std::optional<long> epoch = std::nullopt);
CommandResult cmd_lemma_check(const RunConfig& cfg);
CommandResult cmd_noise_stats(const RunConfig& cfg);

struct LossHistogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<std::size_t> clean, mislabeled;
    long epoch = 0;
};

/// Fixed-width bins over [0, max loss]; the last bin is closed.
LossHistogram loss_histogram(const std::vector<double>& losses, const std::vector<bool>& clean_mask, std::size_t bins);

}  // namespace rtme
