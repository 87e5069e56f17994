// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a sectioned key = value text format.
//
//   # comment
//   [train]
//   epochs = 100
//   lr_decay_epochs = 40, 80
//
// A key may also be written fully qualified (`train.epochs = 100`) outside any
// section. Unknown keys are rejected with the offending key named.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noise.hpp"
#include "theory.hpp"
#include "trainer.hpp"

namespace rtme {

enum class DatasetKind { Mixture, Idx };
enum class TrainMethod { Rtme, Ce, SmallLoss, Truncated, Original };

std::string_view to_string(TrainMethod m);

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Mixture;
    MixtureParams mixture;
    std::size_t n_test = 2000;
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    std::size_t subset = 0;       // idx: keep the first `subset` training examples (0 = all)
    std::size_t test_subset = 0;  // idx: likewise for the test files
};

struct SweepConfig {
    std::vector<std::uint64_t> seeds{0};
    std::vector<long> periods;
    std::vector<double> sigma_perturb;
    std::size_t workers = 1;
};

struct LemmaConfig {
    std::string task = "bundled";
    std::string check = "lemma1";  // or corollary1
    PsiSpec psi;
    double eta = 0.1;
    std::vector<double> eta_per_instance;
};

struct RunConfig {
    DatasetConfig dataset;
    NoiseSpec noise;
    bool noise_seed_set = false;
    TrainMethod method = TrainMethod::Rtme;
    TrainConfig train;
    double val_fraction = 0.1;
    double selection_tau = -1.0;  // small-loss keep schedule; < 0 means use noise.tau
    long selection_tk = 10;
    SweepConfig sweep;
    long hist_epoch = -1;  // -1 means epochs / 2
    std::size_t hist_bins = 30;
    LemmaConfig lemma;
    std::filesystem::path out_dir = "out";

    /// Canonical key=value listing of every setting, in key order.
    std::string canonical() const;
    /// FNV-1a of canonical(), as 16 hex digits.
    std::string hash() const;
    void validate() const;
};

/// Raw key/value pairs keyed "section.key".
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source = "<config>");

RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
/// Reads and parses; relative idx paths resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace rtme
