// SPDX-License-Identifier: Apache-2.0
#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "errors.hpp"

namespace rtme {

double LrSchedule::at(long epoch) const {
    double lr = initial;
    for (long e : decay_epochs)
        if (epoch >= e) lr /= factor;
    return lr;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(lr.initial > 0.0)) throw ConfigError("train.lr must be > 0");
    if (!(lr.factor > 0.0)) throw ConfigError("train.lr_decay_factor must be > 0");
    for (std::size_t i = 1; i < lr.decay_epochs.size(); ++i)
        if (lr.decay_epochs[i] <= lr.decay_epochs[i - 1])
            throw ConfigError("train.lr_decay_epochs must be strictly increasing");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train.momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (period < 1) throw ConfigError("train.R must be >= 1");
    if (period == 1 && !original_only_ablation)
        throw ConfigError("train.R = 1 never truncates; use method = original for that ablation, or R >= 2");
    if (!(sigma_perturb > -1.0)) throw ConfigError("sigma.perturb must be > -1");
    if (!(sigma_min >= 0.0)) throw ConfigError("sigma.clamp_min must be >= 0");
    estimator.validate();
    adapt.validate(estimator);
}

namespace {

using WeightPolicy = std::function<std::vector<double>(long epoch, EpochMode mode, std::span<const double> losses,
                                                       const EstimatorSpec& spec, double sigma)>;

void require_finite(std::span<const double> losses, const std::string& where) {
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (!std::isfinite(losses[i]))
            throw NumericError("non-finite loss at " + where + " (example " + std::to_string(i) + ")");
}

std::vector<std::size_t> layer_sizes(const TrainConfig& cfg, const SplitDataset& split) {
    std::vector<std::size_t> sizes{split.train.dim()};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(static_cast<std::size_t>(split.train.k));
    return sizes;
}

TrainResult run_loop(const TrainConfig& cfg, const SplitDataset& split, const WeightPolicy& policy,
                     const EpochObserver& observer, bool selection_by_policy) {
    const LabeledDataset& train = split.train;
    if (train.size() == 0) throw InputError("empty training set");
    if (split.val.k != train.k || (split.test.size() && split.test.k != train.k))
        throw InputError("train/val/test disagree on the class count");

    Rng root(cfg.seed);
    Rng init_rng = root.split("init");
    Rng shuffle_rng = root.split("shuffle");

    MlpModel model = MlpModel::he_uniform(layer_sizes(cfg, split), init_rng, cfg.activation, cfg.zero_output_init);
    GradientSet velocity = GradientSet::zeros_like(model);
    const SgdParams base{cfg.lr.initial, cfg.momentum, cfg.weight_decay};

    TrainResult result;
    result.model = model;
    if (observer && !observer(0, model)) return result;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    EstimatorSpec spec = cfg.estimator;

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);

        // Fresh full-sample snapshot before any update of this epoch.
        LossSnapshot snap{per_example_losses(model, train), epoch};
        require_finite(snap.losses, "epoch " + std::to_string(epoch) + " snapshot");
        double sigma = three_sigma_threshold(snap, cfg.sigma_min);
        if (cfg.sigma_perturb != 0.0) sigma = perturb_sigma(sigma, cfg.sigma_perturb);
        if (!(sigma > 0.0)) sigma = cfg.sigma_min > 0.0 ? cfg.sigma_min : kDefaultSigmaMin;
        const auto small = select_small_loss(snap.losses, sigma);
        if (cfg.adapt.mode == AdaptMode::GaussianFit && spec.has_parameter() && !small.empty()) {
            std::vector<double> small_losses;
            small_losses.reserve(small.size());
            for (std::size_t i : small) small_losses.push_back(snap.losses[i]);
            spec = spec.with_parameter(adapt_parameter(spec, small_losses, cfg.adapt));
        }
        const EpochMode mode = epoch_mode(epoch, cfg.period);

        SgdParams sgd = base;
        sgd.lr = cfg.lr.at(epoch);
        std::size_t kept = 0;

        for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix x = train.features.gather_rows(idx);
            std::vector<int> y(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) y[i] = train.noisy_labels[idx[i]];

            ForwardResult fwd = mlp_forward(model, x);
            const auto losses = softmax_ce_per_example(fwd.logits, y);
            require_finite(losses, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
            const auto w = policy(epoch, mode, losses, spec, sigma);
            for (double wi : w) kept += wi != 0.0;

            const GradientSet g = mlp_backward(model, fwd.cache, y, w);
            try {
                sgd_momentum_step(model, g, velocity, sgd);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch));
            }
        }

        EpochRecord row;
        row.epoch = epoch;
        row.mode = mode;
        row.sigma = sigma;
        row.parameter = spec.parameter();
        row.lr = sgd.lr;
        row.selected_fraction = selection_by_policy
                                    ? static_cast<double>(kept) / static_cast<double>(train.size())
                                    : static_cast<double>(small.size()) / static_cast<double>(train.size());
        row.train_acc = evaluate(model, train);
        const MemorizationMetrics mem = memorization_metrics(model, train);
        row.clean_fit = mem.clean_fit;
        row.noisy_fit = mem.noisy_fit;
        row.noisy_partition_empty = mem.noisy_empty;
        row.val_acc = split.val.size() ? evaluate(model, split.val) : 0.0;
        row.test_acc = split.test.size() ? evaluate(model, split.test) : 0.0;
        result.record.rows.push_back(row);

        if (result.record.best_epoch < 0 || row.val_acc > result.record.best_val_acc) {
            result.record.best_epoch = epoch;
            result.record.best_val_acc = row.val_acc;
            result.record.test_acc_at_best = row.test_acc;
            result.model = model;
        }
        if (observer && !observer(epoch + 1, model)) break;
    }
    return result;
}

std::vector<double> estimator_policy(long, EpochMode mode, std::span<const double> losses, const EstimatorSpec& spec,
                                     double sigma) {
    return batch_weights(spec, mode, losses, sigma);
}

}  // namespace

TrainResult train_rtme(const TrainConfig& config, const SplitDataset& split, const EpochObserver& observer) {
    config.validate();
    return run_loop(config, split, estimator_policy, observer, false);
}

TrainResult train_ce_baseline(const TrainConfig& config, const SplitDataset& split, const EpochObserver& observer) {
    TrainConfig cfg = config;
    cfg.estimator = EstimatorSpec{EstimatorKind::CE};
    cfg.period = 1;
    cfg.original_only_ablation = true;
    cfg.adapt.mode = AdaptMode::Fixed;
    cfg.validate();
    return run_loop(cfg, split, estimator_policy, observer, false);
}

TrainResult train_truncated_only(const TrainConfig& config, const SplitDataset& split,
                                 const EpochObserver& observer) {
    TrainConfig cfg = config;
    cfg.period = std::max(cfg.epochs, 2L);
    cfg.validate();
    return run_loop(cfg, split, estimator_policy, observer, false);
}

double smallloss_keep_fraction(long epoch, double tau, long t_k) {
    if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("small-loss tau must lie in [0, 1)");
    if (t_k < 1) throw ConfigError("small-loss T_k must be >= 1");
    return 1.0 - std::min(static_cast<double>(epoch) / static_cast<double>(t_k) * tau, tau);
}

std::vector<std::size_t> select_smallest(std::span<const double> losses, double keep_fraction) {
    if (losses.empty()) return {};
    const auto n = losses.size();
    auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9));
    keep = std::clamp<std::size_t>(keep, 1, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

TrainResult train_smallloss_baseline(const TrainConfig& config, double tau, long t_k, const SplitDataset& split,
                                     const EpochObserver& observer) {
    TrainConfig cfg = config;
    cfg.estimator = EstimatorSpec{EstimatorKind::CE};
    cfg.period = 1;
    cfg.original_only_ablation = true;
    cfg.adapt.mode = AdaptMode::Fixed;
    cfg.validate();
    smallloss_keep_fraction(0, tau, t_k);  // validates tau / t_k

    // Mean over the kept examples: weight n / kept on each survivor.
    auto policy = [tau, t_k](long epoch, EpochMode, std::span<const double> losses, const EstimatorSpec&, double) {
        const auto keep = select_smallest(losses, smallloss_keep_fraction(epoch, tau, t_k));
        std::vector<double> w(losses.size(), 0.0);
        const double scale = static_cast<double>(losses.size()) / static_cast<double>(keep.size());
        for (std::size_t i : keep) w[i] = scale;
        return w;
    };
    return run_loop(cfg, split, policy, observer, true);
}

std::vector<double> per_example_losses(const MlpModel& model, const LabeledDataset& data) {
    return softmax_ce_per_example(mlp_logits(model, data.features), data.noisy_labels);
}

double evaluate(const MlpModel& model, const LabeledDataset& data) {
    if (data.size() == 0) return 0.0;
    const auto pred = predict(mlp_logits(model, data.features));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.noisy_labels[i];
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

MemorizationMetrics memorization_metrics(const MlpModel& model, const LabeledDataset& train) {
    const auto pred = predict(mlp_logits(model, train.features));
    std::size_t clean_n = 0, clean_hit = 0, noisy_n = 0, noisy_hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool hit = pred[i] == train.noisy_labels[i];
        if (train.clean_mask[i]) {
            ++clean_n;
            clean_hit += hit;
        } else {
            ++noisy_n;
            noisy_hit += hit;
        }
    }
    MemorizationMetrics m;
    m.clean_empty = clean_n == 0;
    m.noisy_empty = noisy_n == 0;
    m.clean_fit = clean_n ? static_cast<double>(clean_hit) / static_cast<double>(clean_n) : 0.0;
    m.noisy_fit = noisy_n ? static_cast<double>(noisy_hit) / static_cast<double>(noisy_n) : 0.0;
    return m;
}

}  // namespace rtme
